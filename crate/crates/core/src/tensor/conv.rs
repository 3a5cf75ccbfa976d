use rayon::prelude::*;

use super::linalg::{gemm_nn, gemm_tn, transpose};
use super::{Scalar, Shape4, Tensor, TensorError};

/// Output length of a valid (unpadded) convolution along one axis.
pub fn conv_output_dim(input: usize, kernel: usize, stride: usize) -> usize {
    (input - kernel) / stride + 1
}

#[derive(Debug, Clone, Copy)]
struct ConvGeometry {
    input: Shape4,
    kh: usize,
    kw: usize,
    cout: usize,
    stride: usize,
    oh: usize,
    ow: usize,
}

impl ConvGeometry {
    /// Length of one im2col row: `kh · kw · cin`.
    fn patch_len(&self) -> usize {
        self.kh * self.kw * self.input.c
    }

    fn out_pixels(&self) -> usize {
        self.oh * self.ow
    }

    fn output_shape(&self) -> Vec<usize> {
        vec![self.input.n, self.oh, self.ow, self.cout]
    }
}

fn geometry<T: Scalar>(
    op: &'static str,
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    stride: usize,
) -> Result<ConvGeometry, TensorError> {
    if stride == 0 {
        return Err(TensorError::ZeroStride { op });
    }
    let input4 = input.shape4()?;
    let [kh, kw, cin, cout] = match *kernels.shape() {
        [a, b, c, d] => [a, b, c, d],
        _ => {
            return Err(TensorError::RankMismatch {
                op,
                expected: 4,
                found: kernels.rank(),
            })
        }
    };
    if cin != input4.c {
        return Err(TensorError::DimMismatch {
            op,
            left: "input channels",
            left_dim: input4.c,
            right: "kernel input channels",
            right_dim: cin,
        });
    }
    if kh > input4.h || kw > input4.w {
        return Err(TensorError::WindowTooLarge {
            op,
            window: (kh, kw),
            input: (input4.h, input4.w),
        });
    }
    Ok(ConvGeometry {
        input: input4,
        kh,
        kw,
        cout,
        stride,
        oh: conv_output_dim(input4.h, kh, stride),
        ow: conv_output_dim(input4.w, kw, stride),
    })
}

fn check_bias<T: Scalar>(op: &'static str, bias: &Tensor<T>, cout: usize) -> Result<(), TensorError> {
    if bias.shape() != [cout] {
        return Err(TensorError::ShapeMismatch {
            op,
            expected: vec![cout],
            found: bias.shape().to_vec(),
        });
    }
    Ok(())
}

/// Unrolls every receptive field of one image into a row: `[oh·ow, kh·kw·cin]`.
fn im2col<T: Scalar>(image: &[T], g: &ConvGeometry) -> Vec<T> {
    let c = g.input.c;
    let row_len = g.input.w * c;
    let span = g.kw * c;
    let mut col = Vec::with_capacity(g.out_pixels() * g.patch_len());
    for oy in 0..g.oh {
        for ox in 0..g.ow {
            for ky in 0..g.kh {
                let start = (oy * g.stride + ky) * row_len + ox * g.stride * c;
                col.extend_from_slice(&image[start..start + span]);
            }
        }
    }
    col
}

/// Scatter-adds an im2col gradient back onto image positions.
fn col2im<T: Scalar>(col: &[T], g: &ConvGeometry, image: &mut [T]) {
    let c = g.input.c;
    let row_len = g.input.w * c;
    let span = g.kw * c;
    let mut rows = col.chunks_exact(g.patch_len());
    for oy in 0..g.oh {
        for ox in 0..g.ow {
            let patch = rows.next().expect("col has one row per output pixel");
            for (ky, src) in patch.chunks_exact(span).enumerate() {
                let start = (oy * g.stride + ky) * row_len + ox * g.stride * c;
                for (dst, &v) in image[start..start + span].iter_mut().zip(src) {
                    *dst = *dst + v;
                }
            }
        }
    }
}

/// Valid convolution of an NHWC batch with `[kh, kw, cin, cout]` kernels.
///
/// Uses im2col + matrix multiply per image; images are processed in parallel
/// but each output element is summed in a fixed order, so the result does not
/// depend on the thread count.
pub fn conv2d_forward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
) -> Result<Tensor<T>, TensorError> {
    let g = geometry("conv2d_forward", input, kernels, stride)?;
    check_bias("conv2d_forward", bias, g.cout)?;
    let out_img = g.out_pixels() * g.cout;
    let mut out = vec![T::zero(); g.input.n * out_img];
    out.par_chunks_mut(out_img).enumerate().for_each(|(i, dst)| {
        for row in dst.chunks_exact_mut(g.cout) {
            row.copy_from_slice(bias.data());
        }
        let col = im2col(input.outer(i), &g);
        gemm_nn(&col, kernels.data(), dst, g.out_pixels(), g.patch_len(), g.cout);
    });
    Ok(Tensor::from_parts(g.output_shape(), out))
}

/// Reference loop-nest convolution. Agrees with [`conv2d_forward`] up to
/// floating-point summation order.
pub fn conv2d_forward_direct<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
) -> Result<Tensor<T>, TensorError> {
    let g = geometry("conv2d_forward_direct", input, kernels, stride)?;
    check_bias("conv2d_forward_direct", bias, g.cout)?;
    let Shape4 { n, h: _, w, c } = g.input;
    let x = input.data();
    let k = kernels.data();
    let mut out = Vec::with_capacity(n * g.out_pixels() * g.cout);
    for b in 0..n {
        for oy in 0..g.oh {
            for ox in 0..g.ow {
                for co in 0..g.cout {
                    let mut acc = T::zero();
                    for ky in 0..g.kh {
                        for kx in 0..g.kw {
                            let iy = oy * stride + ky;
                            let ix = ox * stride + kx;
                            for ci in 0..c {
                                let xv = x[((b * g.input.h + iy) * w + ix) * c + ci];
                                let kv = k[((ky * g.kw + kx) * c + ci) * g.cout + co];
                                acc = acc + xv * kv;
                            }
                        }
                    }
                    out.push(acc + bias.data()[co]);
                }
            }
        }
    }
    Ok(Tensor::from_parts(g.output_shape(), out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv2dGrads<T = f32> {
    pub input: Tensor<T>,
    pub kernels: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Analytic gradients of [`conv2d_forward`] with respect to its input,
/// kernels and bias, given the upstream gradient `grad_out`.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    grad_out: &Tensor<T>,
    stride: usize,
) -> Result<Conv2dGrads<T>, TensorError> {
    let g = geometry("conv2d_backward", input, kernels, stride)?;
    if grad_out.shape() != g.output_shape().as_slice() {
        return Err(TensorError::ShapeMismatch {
            op: "conv2d_backward",
            expected: g.output_shape(),
            found: grad_out.shape().to_vec(),
        });
    }
    let patch = g.patch_len();
    let pixels = g.out_pixels();
    let kernels_t = transpose(kernels.data(), patch, g.cout);

    let per_image: Vec<(Vec<T>, Vec<T>, Vec<T>)> = (0..g.input.n)
        .into_par_iter()
        .map(|i| {
            let go = grad_out.outer(i);
            let col = im2col(input.outer(i), &g);

            let mut dk = vec![T::zero(); patch * g.cout];
            gemm_tn(&col, go, &mut dk, pixels, patch, g.cout);

            let mut db = vec![T::zero(); g.cout];
            for row in go.chunks_exact(g.cout) {
                for (acc, &v) in db.iter_mut().zip(row) {
                    *acc = *acc + v;
                }
            }

            let mut dcol = vec![T::zero(); pixels * patch];
            gemm_nn(go, &kernels_t, &mut dcol, pixels, g.cout, patch);
            let mut dx = vec![T::zero(); g.input.image_len()];
            col2im(&dcol, &g, &mut dx);
            (dx, dk, db)
        })
        .collect();

    let mut grad_input = Vec::with_capacity(input.len());
    let mut grad_kernels = vec![T::zero(); kernels.len()];
    let mut grad_bias = vec![T::zero(); g.cout];
    for (dx, dk, db) in per_image {
        grad_input.extend_from_slice(&dx);
        for (acc, v) in grad_kernels.iter_mut().zip(dk) {
            *acc = *acc + v;
        }
        for (acc, v) in grad_bias.iter_mut().zip(db) {
            *acc = *acc + v;
        }
    }
    Ok(Conv2dGrads {
        input: Tensor::from_parts(input.shape().to_vec(), grad_input),
        kernels: Tensor::from_parts(kernels.shape().to_vec(), grad_kernels),
        bias: Tensor::from_parts(vec![g.cout], grad_bias),
    })
}
