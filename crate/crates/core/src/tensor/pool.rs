use super::{Scalar, Tensor, TensorError};

/// Output length of a pooling window along one axis; trailing rows or
/// columns that do not fill a window are dropped.
pub fn pool_output_dim(input: usize, pool: usize, stride: usize) -> usize {
    (input - pool) / stride + 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolOutput<T = f32> {
    pub output: Tensor<T>,
    /// Flat index into the input of the element chosen for each output.
    pub argmax: Vec<usize>,
}

/// Max pooling over NHWC input. Ties resolve to the first element in
/// row-major window order.
pub fn maxpool2d_forward<T: Scalar>(
    input: &Tensor<T>,
    pool: usize,
    stride: usize,
) -> Result<PoolOutput<T>, TensorError> {
    const OP: &str = "maxpool2d_forward";
    if stride == 0 {
        return Err(TensorError::ZeroStride { op: OP });
    }
    let s = input.shape4()?;
    if pool == 0 || s.h < pool || s.w < pool {
        return Err(TensorError::WindowTooLarge {
            op: OP,
            window: (pool, pool),
            input: (s.h, s.w),
        });
    }
    let oh = pool_output_dim(s.h, pool, stride);
    let ow = pool_output_dim(s.w, pool, stride);
    let x = input.data();
    let len = s.n * oh * ow * s.c;
    let mut out = Vec::with_capacity(len);
    let mut argmax = Vec::with_capacity(len);
    for b in 0..s.n {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..s.c {
                    let mut best_idx = ((b * s.h + oy * stride) * s.w + ox * stride) * s.c + ch;
                    let mut best = x[best_idx];
                    for py in 0..pool {
                        for px in 0..pool {
                            let idx = ((b * s.h + oy * stride + py) * s.w + ox * stride + px) * s.c + ch;
                            if x[idx] > best {
                                best = x[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    out.push(best);
                    argmax.push(best_idx);
                }
            }
        }
    }
    Ok(PoolOutput {
        output: Tensor::from_parts(vec![s.n, oh, ow, s.c], out),
        argmax,
    })
}

/// Routes each upstream gradient to the input position recorded in `argmax`.
pub fn maxpool2d_backward<T: Scalar>(
    argmax: &[usize],
    grad_out: &Tensor<T>,
    input_shape: &[usize],
) -> Result<Tensor<T>, TensorError> {
    const OP: &str = "maxpool2d_backward";
    if argmax.len() != grad_out.len() {
        return Err(TensorError::DataLength {
            expected: grad_out.len(),
            found: argmax.len(),
        });
    }
    let mut grad_in = Tensor::zeros(input_shape)?;
    let len = grad_in.len();
    let dst = grad_in.data_mut();
    for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
        if idx >= len {
            return Err(TensorError::IndexOutOfRange {
                op: OP,
                index: idx,
                len,
            });
        }
        dst[idx] = dst[idx] + g;
    }
    Ok(grad_in)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_window() {
        let x = Tensor::new(&[1, 2, 2, 1], vec![1.0f32, 5.0, 3.0, 2.0]).unwrap();
        let p = maxpool2d_forward(&x, 2, 2).unwrap();
        assert_eq!(p.output.data(), &[5.0]);
        assert_eq!(p.argmax, vec![1]);

        let g = Tensor::new(&[1, 1, 1, 1], vec![2.0f32]).unwrap();
        let gi = maxpool2d_backward(&p.argmax, &g, x.shape()).unwrap();
        assert_eq!(gi.data(), &[0.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn odd_dims_floor() {
        let x = Tensor::<f32>::zeros(&[1, 109, 109, 32]).unwrap();
        let p = maxpool2d_forward(&x, 2, 2).unwrap();
        assert_eq!(p.output.shape(), &[1, 54, 54, 32]);
    }

    #[test]
    fn constant_field() {
        let x = Tensor::filled(&[2, 5, 4, 3], 0.75f32).unwrap();
        let p = maxpool2d_forward(&x, 2, 2).unwrap();
        assert!(p.output.data().iter().all(|&v| v == 0.75));
        // every argmax lies inside its own window
        let s = p.output.shape4().unwrap();
        for (o, &idx) in p.argmax.iter().enumerate() {
            let ch = o % s.c;
            let ox = (o / s.c) % s.w;
            let oy = (o / (s.c * s.w)) % s.h;
            let (iy, ix, ic) = ((idx / 3 / 4) % 5, (idx / 3) % 4, idx % 3);
            assert_eq!(ic, ch);
            assert!(iy / 2 == oy && ix / 2 == ox);
        }
    }

    #[test]
    fn too_small_input() {
        let x = Tensor::<f32>::zeros(&[1, 1, 4, 1]).unwrap();
        assert!(matches!(
            maxpool2d_forward(&x, 2, 2),
            Err(TensorError::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn backward_rejects_bad_index() {
        let g = Tensor::new(&[1, 1, 1, 1], vec![1.0f32]).unwrap();
        let err = maxpool2d_backward(&[4], &g, &[1, 2, 2, 1]).unwrap_err();
        assert!(matches!(err, TensorError::IndexOutOfRange { index: 4, len: 4, .. }));
    }

    #[test]
    fn zero_grad_routes_to_zero() {
        let x = Tensor::from_fn(&[1, 4, 4, 2], |i| ((i * 13) % 7) as f32).unwrap();
        let p = maxpool2d_forward(&x, 2, 2).unwrap();
        let g = Tensor::<f32>::zeros(p.output.shape()).unwrap();
        let gi = maxpool2d_backward(&p.argmax, &g, x.shape()).unwrap();
        assert!(gi.data().iter().all(|&v| v == 0.0));
    }
}
