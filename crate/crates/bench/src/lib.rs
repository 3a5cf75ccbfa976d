//! Deterministic inputs shared by the benchmarks.

use pconet_core::Tensor;

/// A smooth pseudo-random tensor; cheap to build and free of denormals.
pub fn wave(shape: &[usize], phase: f32) -> Tensor<f32> {
    Tensor::from_fn(shape, |i| (i as f32 * 0.618 + phase).sin() * 0.5 + 0.5).expect("benchmark shapes are valid")
}
