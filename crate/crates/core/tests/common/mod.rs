#![allow(dead_code)]

use pconet_core::model::LayerEntry;
use pconet_core::nn::{Activation, LayerDesc};
use pconet_core::{ModelSpec, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Conv block followed by a dense sigmoid head, for 8×8 RGB inputs.
pub fn micro_spec() -> ModelSpec {
    ModelSpec::new(
        vec![8, 8, 3],
        vec![
            LayerEntry::titled(
                "conv_1",
                "Conv_1",
                LayerDesc::Conv2d {
                    filters: 4,
                    kernel: 3,
                    stride: 1,
                },
            ),
            LayerEntry::hidden("conv_1/relu", LayerDesc::Activation(Activation::Relu)),
            LayerEntry::titled("max_pool_1", "Max_pool_1", LayerDesc::MaxPool2d { pool: 2, stride: 2 }),
            LayerEntry::titled("flatten", "Flattening Layer", LayerDesc::Flatten),
            LayerEntry::titled("output", "Output Layer", LayerDesc::Dense { units: 2 }),
            LayerEntry::hidden("output/sigmoid", LayerDesc::Activation(Activation::Sigmoid)),
        ],
    )
}

pub fn uniform(shape: &[usize], lo: f64, hi: f64, seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_| rng.gen_range(lo..hi)).unwrap()
}

pub fn one_hot_rows(labels: &[usize]) -> Tensor<f64> {
    let mut data = vec![0.0; labels.len() * 2];
    for (i, &l) in labels.iter().enumerate() {
        data[i * 2 + l] = 1.0;
    }
    Tensor::new(&[labels.len(), 2], data).unwrap()
}
