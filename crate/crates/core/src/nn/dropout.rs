use rand::Rng;

use super::NnError;
use crate::tensor::{Scalar, Tensor};

/// Inverted dropout. Each element is zeroed with probability `rate`; survivors
/// are scaled by `1/(1−rate)`. Returns the output and the mask it was
/// multiplied by, whose entries are `0` or `1/(1−rate)`.
pub fn dropout_forward<T: Scalar, R: Rng + ?Sized>(
    input: &Tensor<T>,
    rate: f64,
    rng: &mut R,
) -> Result<(Tensor<T>, Tensor<T>), NnError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NnError::InvalidRate(rate));
    }
    let keep = T::from_f64_lossy(1.0 / (1.0 - rate));
    let mask = if rate == 0.0 {
        Tensor::filled(input.shape(), T::one())?
    } else {
        Tensor::from_fn(
            input.shape(),
            |_| if rng.gen::<f64>() < rate { T::zero() } else { keep },
        )?
    };
    let out = input.data().iter().zip(mask.data()).map(|(&x, &m)| x * m).collect();
    Ok((Tensor::new(input.shape(), out)?, mask))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn zero_rate_is_identity() {
        let x = Tensor::from_fn(&[4, 5], |i| i as f32).unwrap();
        let (y, mask) = dropout_forward(&x, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(y, x);
        assert!(mask.data().iter().all(|&m| m == 1.0));
    }

    #[test]
    fn mask_values() {
        let x = Tensor::filled(&[1000], 1.0f32).unwrap();
        let (_, mask) = dropout_forward(&x, 0.25, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let keep = 1.0 / 0.75f32;
        assert!(mask.data().iter().all(|&m| m == 0.0 || m == keep));
    }

    #[test]
    fn preserves_expectation() {
        // 10k trials of a single element: mean of outputs should match input.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = Tensor::filled(&[1], 3.0f64).unwrap();
        let trials = 10_000;
        let mean: f64 = (0..trials)
            .map(|_| dropout_forward(&x, 0.5, &mut rng).unwrap().0.data()[0])
            .sum::<f64>()
            / trials as f64;
        assert!((mean - 3.0).abs() / 3.0 < 0.02, "mean {mean}");
    }

    #[test]
    fn rejects_bad_rate() {
        let x = Tensor::filled(&[2], 1.0f32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            dropout_forward(&x, 1.0, &mut rng).unwrap_err(),
            NnError::InvalidRate(1.0)
        );
        assert!(dropout_forward(&x, -0.1, &mut rng).is_err());
        assert!(dropout_forward(&x, f64::NAN, &mut rng).is_err());
    }
}
