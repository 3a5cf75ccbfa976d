use super::{Scalar, Tensor, TensorError};

/// `c[m,n] += a[m,k] · b[k,n]`, all row-major.
///
/// The loop order keeps the innermost loop over contiguous rows of `b` and `c`
/// so it vectorizes; summation order per output element is fixed (ascending k).
pub(crate) fn gemm_nn<T: Scalar>(a: &[T], b: &[T], c: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for (a_row, c_row) in a.chunks_exact(k).zip(c.chunks_exact_mut(n)) {
        for (&aik, b_row) in a_row.iter().zip(b.chunks_exact(n)) {
            if aik == T::zero() {
                continue;
            }
            for (cv, &bv) in c_row.iter_mut().zip(b_row) {
                *cv = *cv + aik * bv;
            }
        }
    }
}

/// `c[k,n] += a[m,k]ᵀ · b[m,n]`: accumulates outer products row by row of `a`.
pub(crate) fn gemm_tn<T: Scalar>(a: &[T], b: &[T], c: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    debug_assert_eq!(c.len(), k * n);
    for (a_row, b_row) in a.chunks_exact(k).zip(b.chunks_exact(n)) {
        for (&aik, c_row) in a_row.iter().zip(c.chunks_exact_mut(n)) {
            if aik == T::zero() {
                continue;
            }
            for (cv, &bv) in c_row.iter_mut().zip(b_row) {
                *cv = *cv + aik * bv;
            }
        }
    }
}

pub(crate) fn transpose<T: Scalar>(a: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = vec![T::zero(); a.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = a[r * cols + c];
        }
    }
    out
}

fn matrix_dims<T: Scalar>(t: &Tensor<T>, op: &'static str) -> Result<(usize, usize), TensorError> {
    match *t.shape() {
        [r, c] => Ok((r, c)),
        _ => Err(TensorError::RankMismatch {
            op,
            expected: 2,
            found: t.rank(),
        }),
    }
}

/// Matrix product `[m,k] · [k,n] → [m,n]`.
pub fn matmul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    let (m, k) = matrix_dims(a, "matmul")?;
    let (k2, n) = matrix_dims(b, "matmul")?;
    if k != k2 {
        return Err(TensorError::DimMismatch {
            op: "matmul",
            left: "lhs columns",
            left_dim: k,
            right: "rhs rows",
            right_dim: k2,
        });
    }
    let mut out = vec![T::zero(); m * n];
    gemm_nn(a.data(), b.data(), &mut out, m, k, n);
    Ok(Tensor::from_parts(vec![m, n], out))
}

/// `aᵀ · b` for `a: [m,k]`, `b: [m,n]` → `[k,n]`.
pub fn matmul_at_b<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    let (m, k) = matrix_dims(a, "matmul_at_b")?;
    let (m2, n) = matrix_dims(b, "matmul_at_b")?;
    if m != m2 {
        return Err(TensorError::DimMismatch {
            op: "matmul_at_b",
            left: "lhs rows",
            left_dim: m,
            right: "rhs rows",
            right_dim: m2,
        });
    }
    let mut out = vec![T::zero(); k * n];
    gemm_tn(a.data(), b.data(), &mut out, m, k, n);
    Ok(Tensor::from_parts(vec![k, n], out))
}

/// `a · bᵀ` for `a: [m,k]`, `b: [n,k]` → `[m,n]`.
pub fn matmul_a_bt<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
    let (m, k) = matrix_dims(a, "matmul_a_bt")?;
    let (n, k2) = matrix_dims(b, "matmul_a_bt")?;
    if k != k2 {
        return Err(TensorError::DimMismatch {
            op: "matmul_a_bt",
            left: "lhs columns",
            left_dim: k,
            right: "rhs columns",
            right_dim: k2,
        });
    }
    let bt = transpose(b.data(), n, k);
    let mut out = vec![T::zero(); m * n];
    gemm_nn(a.data(), &bt, &mut out, m, k, n);
    Ok(Tensor::from_parts(vec![m, n], out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                c[i * n + j] = (0..k).map(|p| a[i * k + p] * b[p * n + j]).sum();
            }
        }
        c
    }

    #[test]
    fn small_product() {
        let a = Tensor::new(&[2, 2], vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::new(&[2, 1], vec![5.0f32, 6.0]).unwrap();
        assert_eq!(matmul(&a, &b).unwrap().data(), &[17.0, 39.0]);
    }

    #[test]
    fn identity_is_neutral() {
        let a = Tensor::from_fn(&[3, 4], |i| i as f32 * 0.5 - 2.0).unwrap();
        let eye = Tensor::from_fn(&[4, 4], |i| if i / 4 == i % 4 { 1.0f32 } else { 0.0 }).unwrap();
        assert_eq!(matmul(&a, &eye).unwrap(), a);
    }

    #[test]
    fn inner_dim_mismatch_names_both_dims() {
        let a = Tensor::<f32>::zeros(&[2, 3]).unwrap();
        let b = Tensor::<f32>::zeros(&[4, 2]).unwrap();
        let err = matmul(&a, &b).unwrap_err();
        assert!(matches!(
            err,
            TensorError::DimMismatch {
                left_dim: 3,
                right_dim: 4,
                ..
            }
        ));
        assert!(err.to_string().contains('3') && err.to_string().contains('4'));
    }

    #[test]
    fn transposed_variants_agree_with_naive() {
        let (m, k, n) = (5, 7, 3);
        let a: Vec<f64> = (0..m * k).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let b: Vec<f64> = (0..k * n).map(|i| ((i * 13 % 7) as f64) * 0.25).collect();
        let expect = naive(&a, &b, m, k, n);

        let ta = Tensor::new(&[m, k], a.clone()).unwrap();
        let tb = Tensor::new(&[k, n], b.clone()).unwrap();
        assert_eq!(matmul(&ta, &tb).unwrap().data(), expect.as_slice());

        let at = Tensor::new(&[k, m], transpose(&a, m, k)).unwrap();
        assert_eq!(matmul_at_b(&at, &tb).unwrap().data(), expect.as_slice());

        let bt = Tensor::new(&[n, k], transpose(&b, k, n)).unwrap();
        assert_eq!(matmul_a_bt(&ta, &bt).unwrap().data(), expect.as_slice());
    }
}
