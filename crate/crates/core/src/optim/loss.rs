use super::OptimError;
use crate::tensor::{Scalar, Tensor};

/// Probabilities are clipped to `[PROB_CLIP, 1 − PROB_CLIP]` before taking logs.
pub const PROB_CLIP: f64 = 1e-7;

fn validate<T: Scalar>(probs: &Tensor<T>, targets: &Tensor<T>) -> Result<usize, OptimError> {
    if probs.shape() != targets.shape() || probs.rank() != 2 || probs.shape()[1] != 2 {
        return Err(OptimError::ShapeMismatch {
            expected: probs.shape().to_vec(),
            found: targets.shape().to_vec(),
        });
    }
    for (row, y) in targets.data().chunks_exact(2).enumerate() {
        let one_hot = (y[0] == T::one() && y[1] == T::zero()) || (y[0] == T::zero() && y[1] == T::one());
        if !one_hot {
            return Err(OptimError::NotOneHot { row });
        }
    }
    Ok(probs.shape()[0])
}

/// Mean binary cross-entropy over every sample and both sigmoid outputs:
/// `−1/(2n) · Σ [y·ln p + (1−y)·ln(1−p)]` on clipped `p`.
pub fn bce_value<T: Scalar>(probs: &Tensor<T>, targets: &Tensor<T>) -> Result<f64, OptimError> {
    let n = validate(probs, targets)?;
    let lo = T::from_f64_lossy(PROB_CLIP);
    let hi = T::one() - lo;
    let total: f64 = probs
        .data()
        .iter()
        .zip(targets.data())
        .map(|(&p, &y)| {
            let p = p.max(lo).min(hi).as_f64();
            let y = y.as_f64();
            y * p.ln() + (1.0 - y) * (1.0 - p).ln()
        })
        .sum();
    Ok(-total / (2 * n) as f64)
}

/// Loss value and its exact gradient with respect to `probs`. Entries outside
/// the clip range get zero gradient, matching the clipped expression.
pub fn bce_loss<T: Scalar>(probs: &Tensor<T>, targets: &Tensor<T>) -> Result<(f64, Tensor<T>), OptimError> {
    let loss = bce_value(probs, targets)?;
    let n = probs.shape()[0];
    let lo = T::from_f64_lossy(PROB_CLIP);
    let hi = T::one() - lo;
    let scale = T::from_f64_lossy(-1.0 / (2 * n) as f64);
    let grad = probs
        .data()
        .iter()
        .zip(targets.data())
        .map(|(&p, &y)| {
            if p < lo || p > hi {
                T::zero()
            } else {
                scale * (y / p - (T::one() - y) / (T::one() - p))
            }
        })
        .collect();
    Ok((loss, Tensor::new(probs.shape(), grad).expect("same shape as probs")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{numeric_gradient, relative_error};

    fn t(rows: &[[f64; 2]]) -> Tensor<f64> {
        Tensor::new(&[rows.len(), 2], rows.iter().flatten().copied().collect()).unwrap()
    }

    #[test]
    fn uninformative_prediction_costs_ln2() {
        let loss = bce_value(&t(&[[0.5, 0.5]]), &t(&[[1.0, 0.0]])).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_is_near_zero() {
        let loss = bce_value(&t(&[[1.0, 0.0]]), &t(&[[1.0, 0.0]])).unwrap();
        assert!(loss > 0.0 && loss < 1e-6, "{loss}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let probs = t(&[[0.3, 0.8], [0.65, 0.1], [0.5, 0.45]]);
        let targets = t(&[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
        let (_, grad) = bce_loss(&probs, &targets).unwrap();
        let numeric = numeric_gradient(&probs, 1e-7, |p| bce_value(p, &targets).unwrap());
        assert!(relative_error(grad.data(), numeric.data()) < 1e-5);
    }

    #[test]
    fn clipped_entries_have_zero_gradient() {
        let (_, grad) = bce_loss(&t(&[[1.0, 0.0]]), &t(&[[0.0, 1.0]])).unwrap();
        assert_eq!(grad.data(), &[0.0, 0.0]);
    }

    #[test]
    fn duplicated_batch_same_loss() {
        let probs = t(&[[0.2, 0.9], [0.7, 0.4]]);
        let targets = t(&[[0.0, 1.0], [1.0, 0.0]]);
        let doubled_p = t(&[[0.2, 0.9], [0.7, 0.4], [0.2, 0.9], [0.7, 0.4]]);
        let doubled_t = t(&[[0.0, 1.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
        let a = bce_value(&probs, &targets).unwrap();
        let b = bce_value(&doubled_p, &doubled_t).unwrap();
        assert!((a - b).abs() < 1e-7);
    }

    #[test]
    fn rejects_soft_targets() {
        let err = bce_value(&t(&[[0.5, 0.5], [0.5, 0.5]]), &t(&[[1.0, 0.0], [0.5, 0.5]])).unwrap_err();
        assert_eq!(err, OptimError::NotOneHot { row: 1 });
        assert!(bce_value(&t(&[[0.5, 0.5]]), &t(&[[1.0, 1.0]])).is_err());
    }
}
