//! Central finite-difference gradient estimates for verifying hand-derived
//! backward passes. Intended for `f64` tensors.

use crate::tensor::Tensor;

/// Default step for central differences in `f64`.
pub const DEFAULT_STEP: f64 = 1e-6;

/// Estimates `∂f/∂x` elementwise with `(f(x+h) − f(x−h)) / 2h`.
pub fn numeric_gradient(x: &Tensor<f64>, step: f64, mut f: impl FnMut(&Tensor<f64>) -> f64) -> Tensor<f64> {
    let mut probe = x.clone();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + step;
        let up = f(&probe);
        probe.data_mut()[i] = orig - step;
        let down = f(&probe);
        probe.data_mut()[i] = orig;
        grad.push((up - down) / (2.0 * step));
    }
    Tensor::new(x.shape(), grad).expect("shape taken from x")
}

/// Largest elementwise deviation, relative to the largest gradient magnitude
/// of either side: `max|a − n| / max(max|a|, max|n|)`.
///
/// Returns 0 when both gradients are identically zero.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
    let scale = analytic.iter().chain(numeric).fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = analytic
        .iter()
        .zip(numeric)
        .fold(0.0f64, |m, (a, n)| m.max((a - n).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Weighted sum `Σ yᵢ·wᵢ`; using random weights as the upstream gradient
/// turns any vector-valued map into a scalar one for checking.
pub fn projection(y: &Tensor<f64>, weights: &Tensor<f64>) -> f64 {
    assert_eq!(y.shape(), weights.shape(), "projection shapes differ");
    y.data().iter().zip(weights.data()).map(|(a, b)| a * b).sum()
}
