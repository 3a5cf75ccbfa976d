use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Layer;
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    /// `U(−a, a)` with `a = sqrt(6 / (fan_in + fan_out))`; biases zero.
    GlorotUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InitPolicy {
    pub scheme: InitScheme,
    pub seed: u64,
}

impl InitPolicy {
    pub fn glorot(seed: u64) -> Self {
        InitPolicy {
            scheme: InitScheme::GlorotUniform,
            seed,
        }
    }

    /// Independent policy for the `index`-th layer of a model.
    pub fn for_layer(&self, index: usize) -> Self {
        let mixed = self
            .seed
            .wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        InitPolicy { seed: mixed, ..*self }
    }
}

/// Glorot bound for a weight tensor. Conv kernels `[kh, kw, cin, cout]` use
/// `fan_in = kh·kw·cin` and `fan_out = kh·kw·cout`; dense `[in, out]` the two dims.
pub fn glorot_limit(weight_shape: &[usize]) -> f64 {
    let (fan_in, fan_out) = match *weight_shape {
        [kh, kw, cin, cout] => (kh * kw * cin, kh * kw * cout),
        [i, o] => (i, o),
        _ => panic!("glorot_limit expects a dense or conv weight shape, got {weight_shape:?}"),
    };
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

fn fill_uniform<T: Scalar>(t: &mut Tensor<T>, limit: f64, rng: &mut ChaCha8Rng) {
    for v in t.data_mut() {
        *v = T::from_f64_lossy(rng.gen_range(-limit..limit));
    }
}

/// Initializes a layer's parameters. Layers without parameters are untouched.
pub fn init_weights<T: Scalar>(layer: &mut Layer<T>, policy: &InitPolicy) {
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let InitScheme::GlorotUniform = policy.scheme;
    for (name, param) in layer.params_mut() {
        if name == "bias" {
            param.fill(T::zero());
        } else {
            let limit = glorot_limit(param.shape());
            fill_uniform(param, limit, &mut rng);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::LayerDesc;

    fn conv1() -> Layer<f32> {
        Layer::build(
            &LayerDesc::Conv2d {
                filters: 32,
                kernel: 3,
                stride: 1,
            },
            &[224, 224, 3],
        )
        .unwrap()
    }

    #[test]
    fn same_seed_same_weights() {
        let mut a = conv1();
        let mut b = conv1();
        init_weights(&mut a, &InitPolicy::glorot(11));
        init_weights(&mut b, &InitPolicy::glorot(11));
        assert_eq!(a.params()[0].1, b.params()[0].1);
        let mut c = conv1();
        init_weights(&mut c, &InitPolicy::glorot(12));
        assert_ne!(a.params()[0].1, c.params()[0].1);
    }

    #[test]
    fn conv_bound_and_zero_bias() {
        let mut layer = conv1();
        init_weights(&mut layer, &InitPolicy::glorot(5));
        // fan_in = 3·3·3 = 27, fan_out = 3·3·32 = 288
        let a = (6.0f64 / (27.0 + 288.0)).sqrt();
        assert!((glorot_limit(&[3, 3, 3, 32]) - a).abs() < 1e-15);
        let params = layer.params();
        let (_, kernels) = params[0];
        assert!(kernels.data().iter().all(|&w| (w as f64).abs() < a));
        assert!(kernels.data().iter().any(|&w| w != 0.0));
        assert!(params[1].1.data().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn layer_streams_differ() {
        let p = InitPolicy::glorot(1);
        assert_ne!(p.for_layer(0).seed, p.for_layer(1).seed);
    }
}
