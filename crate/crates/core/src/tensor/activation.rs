use super::{Scalar, Tensor, TensorError};

fn same_shape<T: Scalar>(op: &'static str, a: &Tensor<T>, b: &Tensor<T>) -> Result<(), TensorError> {
    if a.shape() != b.shape() {
        return Err(TensorError::ShapeMismatch {
            op,
            expected: a.shape().to_vec(),
            found: b.shape().to_vec(),
        });
    }
    Ok(())
}

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Gradient of [`relu`]; the derivative at exactly zero is taken as zero.
pub fn relu_backward<T: Scalar>(input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    same_shape("relu_backward", input, grad_out)?;
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Ok(Tensor::from_parts(input.shape().to_vec(), data))
}

/// Logistic function, evaluated without overflow for large `|x|`.
pub fn sigmoid_scalar<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub fn sigmoid<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(sigmoid_scalar)
}

/// Gradient of [`sigmoid`] given its forward *output* `s`: `g · s · (1 − s)`.
pub fn sigmoid_backward<T: Scalar>(output: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    same_shape("sigmoid_backward", output, grad_out)?;
    let data = output
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&s, &g)| g * s * (T::one() - s))
        .collect();
    Ok(Tensor::from_parts(output.shape().to_vec(), data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_values() {
        let x = Tensor::new(&[3], vec![-3.0f32, 0.0, 2.0]).unwrap();
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
        let g = Tensor::new(&[3], vec![1.0f32, 1.0, 1.0]).unwrap();
        assert_eq!(relu_backward(&x, &g).unwrap().data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn sigmoid_midpoint_and_slope() {
        assert_eq!(sigmoid_scalar(0.0f64), 0.5);
        let x = Tensor::new(&[1], vec![0.0f64]).unwrap();
        let g = Tensor::new(&[1], vec![1.0f64]).unwrap();
        let analytic = sigmoid_backward(&sigmoid(&x), &g).unwrap().data()[0];
        let h = 1e-6;
        let numeric = (sigmoid_scalar(h) - sigmoid_scalar(-h)) / (2.0 * h);
        assert!((analytic - 0.25).abs() < 1e-15);
        assert!((analytic - numeric).abs() / numeric < 1e-8);
    }

    #[test]
    fn sigmoid_saturates_without_nan() {
        let x = Tensor::new(&[2], vec![-1000.0f32, 1000.0]).unwrap();
        let s = sigmoid(&x);
        assert!(s.is_finite());
        assert_eq!(s.data(), &[0.0, 1.0]);
    }
}
