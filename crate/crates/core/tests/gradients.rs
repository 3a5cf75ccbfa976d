mod common;

use common::{micro_spec, one_hot_rows, uniform};
use pconet_core::gradcheck::{numeric_gradient, projection, relative_error, DEFAULT_STEP};
use pconet_core::nn::{init_weights, Activation, InitPolicy, Layer, LayerDesc};
use pconet_core::optim::bce_loss;
use pconet_core::{Model, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOLERANCE: f64 = 1e-4;

fn built(desc: LayerDesc, input: &[usize], seed: u64) -> Layer<f64> {
    let mut layer = Layer::build(&desc, input).unwrap();
    init_weights(&mut layer, &InitPolicy::glorot(seed));
    // non-zero biases
    for (name, p) in layer.params_mut() {
        if name == "bias" {
            let n = p.len();
            p.data_mut()
                .iter_mut()
                .enumerate()
                .for_each(|(i, v)| *v = 0.05 * (i as f64 - n as f64 / 2.0));
        }
    }
    layer
}

fn forward_seeded(layer: &mut Layer<f64>, x: &Tensor<f64>, mask_seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(mask_seed);
    layer.forward(x, true, &mut rng).unwrap()
}

/// Checks input and parameter gradients of one layer against central
/// differences of the projected output `Σ w·layer(x)`.
fn check_layer(desc: LayerDesc, input: &[usize], batch: usize) -> f64 {
    let mut shape = vec![batch];
    shape.extend_from_slice(input);
    let x = uniform(&shape, -1.0, 1.0, 11);
    let mut layer = built(desc, input, 3);
    let y = forward_seeded(&mut layer, &x, 99);
    let w = uniform(y.shape(), -1.0, 1.0, 12);
    layer.zero_grad();
    let grad_x = layer.backward(&w).unwrap();

    let probe = layer.clone();
    let num_x = numeric_gradient(&x, DEFAULT_STEP, |xp| {
        let mut l = probe.clone();
        projection(&forward_seeded(&mut l, xp, 99), &w)
    });
    let mut worst = relative_error(grad_x.data(), num_x.data());

    for (pi, (_, analytic)) in layer.grads().into_iter().enumerate() {
        let current = layer.params()[pi].1.clone();
        let numeric = numeric_gradient(&current, DEFAULT_STEP, |pp| {
            let mut l = probe.clone();
            *l.params_mut()[pi].1 = pp.clone();
            projection(&forward_seeded(&mut l, &x, 99), &w)
        });
        worst = worst.max(relative_error(analytic.data(), numeric.data()));
    }
    worst
}

#[test]
fn conv2d_gradients() {
    let err = check_layer(
        LayerDesc::Conv2d {
            filters: 3,
            kernel: 3,
            stride: 1,
        },
        &[6, 6, 2],
        2,
    );
    assert!(err < TOLERANCE, "relative error {err}");
}

#[test]
fn strided_conv2d_gradients() {
    let err = check_layer(
        LayerDesc::Conv2d {
            filters: 2,
            kernel: 3,
            stride: 2,
        },
        &[7, 7, 2],
        2,
    );
    assert!(err < TOLERANCE, "relative error {err}");
}

#[test]
fn maxpool_gradients() {
    let err = check_layer(LayerDesc::MaxPool2d { pool: 2, stride: 2 }, &[5, 5, 3], 2);
    assert!(err < TOLERANCE, "relative error {err}");
}

#[test]
fn flatten_gradients() {
    let err = check_layer(LayerDesc::Flatten, &[3, 2, 2], 2);
    assert!(err < TOLERANCE, "relative error {err}");
}

#[test]
fn dense_gradients() {
    let err = check_layer(LayerDesc::Dense { units: 5 }, &[7], 3);
    assert!(err < TOLERANCE, "relative error {err}");
}

#[test]
fn relu_gradients() {
    let err = check_layer(LayerDesc::Activation(Activation::Relu), &[4, 4, 2], 2);
    assert!(err < TOLERANCE, "relative error {err}");
}

#[test]
fn sigmoid_gradients() {
    let err = check_layer(LayerDesc::Activation(Activation::Sigmoid), &[6], 3);
    assert!(err < TOLERANCE, "relative error {err}");
}

#[test]
fn dropout_gradients() {
    let err = check_layer(LayerDesc::Dropout { rate: 0.5 }, &[10], 4);
    assert!(err < TOLERANCE, "relative error {err}");
}

fn micro_loss(model: &Model<f64>, x: &Tensor<f64>, y: &Tensor<f64>) -> f64 {
    bce_loss(&model.infer(x).unwrap(), y).unwrap().0
}

#[test]
fn micro_network_gradients() {
    let mut model = Model::<f64>::new(micro_spec(), InitPolicy::glorot(21)).unwrap();
    let x = uniform(&[3, 8, 8, 3], 0.0, 1.0, 5);
    let y = one_hot_rows(&[0, 1, 0]);

    model.zero_grad();
    let probs = model.forward(&x, false).unwrap();
    let (_, dprobs) = bce_loss(&probs, &y).unwrap();
    let grad_x = model.backward(&dprobs).unwrap();

    let num_x = numeric_gradient(&x, DEFAULT_STEP, |xp| micro_loss(&model, xp, &y));
    let err = relative_error(grad_x.data(), num_x.data());
    assert!(err < TOLERANCE, "input gradient relative error {err}");

    let grads: Vec<(String, Tensor<f64>)> = model.named_grads().into_iter().map(|(n, g)| (n, g.clone())).collect();
    assert_eq!(grads.len(), 4);
    for (pi, (name, analytic)) in grads.iter().enumerate() {
        let current = model.named_params()[pi].1.clone();
        let numeric = numeric_gradient(&current, DEFAULT_STEP, |pp| {
            let mut m = model.clone();
            *m.named_params_mut()[pi].1 = pp.clone();
            micro_loss(&m, &x, &y)
        });
        let err = relative_error(analytic.data(), numeric.data());
        assert!(err < TOLERANCE, "{name}: relative error {err}");
    }
}

#[test]
fn loss_gradient_matches_differences() {
    let p = uniform(&[4, 2], 0.05, 0.95, 8);
    let y = one_hot_rows(&[1, 0, 0, 1]);
    let (_, analytic) = bce_loss(&p, &y).unwrap();
    let numeric = numeric_gradient(&p, DEFAULT_STEP, |pp| bce_loss(pp, &y).unwrap().0);
    let err = relative_error(analytic.data(), numeric.data());
    assert!(err < 1e-5, "relative error {err}");
}
