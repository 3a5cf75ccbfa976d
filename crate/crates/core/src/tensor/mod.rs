//! Dense row-major tensors and the numeric kernels the network is built from.
//!
//! Activations use NHWC layout throughout, so a flattened feature map is
//! ordered height-major, then width, then channel. Convolution kernels are
//! stored as `[kh, kw, cin, cout]`.
//!
//! Every kernel is generic over [`Scalar`] so the same code path runs in
//! `f32` for training and in `f64` for finite-difference gradient checks.

mod activation;
mod conv;
mod linalg;
mod pool;

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub use activation::{relu, relu_backward, sigmoid, sigmoid_backward, sigmoid_scalar};
pub use conv::{conv2d_backward, conv2d_forward, conv2d_forward_direct, conv_output_dim, Conv2dGrads};
pub use linalg::{matmul, matmul_a_bt, matmul_at_b};
pub use pool::{maxpool2d_backward, maxpool2d_forward, pool_output_dim, PoolOutput};

/// Element type for tensors: `f32` for training, `f64` for gradient checks.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Default + Sum + Send + Sync + fmt::Debug + fmt::Display + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 converts to every float type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Maximum supported rank.
pub const MAX_RANK: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TensorError {
    /// A shape with a zero dim, or a rank outside `1..=4`.
    InvalidShape {
        shape: Vec<usize>,
    },
    DataLength {
        expected: usize,
        found: usize,
    },
    RankMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },
    /// Two dims that must agree do not, e.g. input channels vs kernel `cin`.
    DimMismatch {
        op: &'static str,
        left: &'static str,
        left_dim: usize,
        right: &'static str,
        right_dim: usize,
    },
    /// The kernel or pool window does not fit inside the input.
    WindowTooLarge {
        op: &'static str,
        window: (usize, usize),
        input: (usize, usize),
    },
    ZeroStride {
        op: &'static str,
    },
    ShapeMismatch {
        op: &'static str,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        len: usize,
    },
}

impl fmt::Display for TensorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorError::InvalidShape { shape } => {
                write!(f, "invalid shape {shape:?}: rank must be 1..=4 and every dim >= 1")
            }
            TensorError::DataLength { expected, found } => {
                write!(f, "data length {found} does not match shape volume {expected}")
            }
            TensorError::RankMismatch { op, expected, found } => {
                write!(f, "{op}: expected rank {expected}, found rank {found}")
            }
            TensorError::DimMismatch {
                op,
                left,
                left_dim,
                right,
                right_dim,
            } => {
                write!(f, "{op}: {left} ({left_dim}) does not match {right} ({right_dim})")
            }
            TensorError::WindowTooLarge { op, window, input } => write!(
                f,
                "{op}: window {}x{} does not fit input {}x{}",
                window.0, window.1, input.0, input.1
            ),
            TensorError::ZeroStride { op } => write!(f, "{op}: stride must be at least 1"),
            TensorError::ShapeMismatch { op, expected, found } => {
                write!(f, "{op}: expected shape {expected:?}, found {found:?}")
            }
            TensorError::IndexOutOfRange { op, index, len } => {
                write!(f, "{op}: index {index} out of range for length {len}")
            }
        }
    }
}

impl std::error::Error for TensorError {}

/// Batch, height, width, channels of an NHWC tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape4 {
    pub n: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
}

impl Shape4 {
    pub fn new(n: usize, h: usize, w: usize, c: usize) -> Result<Self, TensorError> {
        if n == 0 || h == 0 || w == 0 || c == 0 {
            return Err(TensorError::InvalidShape {
                shape: vec![n, h, w, c],
            });
        }
        Ok(Shape4 { n, h, w, c })
    }

    pub fn volume(&self) -> usize {
        self.n * self.h * self.w * self.c
    }

    /// Elements in one image of the batch.
    pub fn image_len(&self) -> usize {
        self.h * self.w * self.c
    }

    pub fn to_vec(self) -> Vec<usize> {
        vec![self.n, self.h, self.w, self.c]
    }
}

impl fmt::Display for Shape4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.n, self.h, self.w, self.c)
    }
}

fn check_shape(shape: &[usize]) -> Result<usize, TensorError> {
    if shape.is_empty() || shape.len() > MAX_RANK || shape.contains(&0) {
        return Err(TensorError::InvalidShape { shape: shape.to_vec() });
    }
    Ok(shape.iter().product())
}

/// Dense row-major array of rank 1 to 4.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: &[usize], data: Vec<T>) -> Result<Self, TensorError> {
        let expected = check_shape(shape)?;
        if data.len() != expected {
            return Err(TensorError::DataLength {
                expected,
                found: data.len(),
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self, TensorError> {
        Self::filled(shape, T::zero())
    }

    pub fn filled(shape: &[usize], value: T) -> Result<Self, TensorError> {
        let len = check_shape(shape)?;
        Ok(Tensor {
            shape: shape.to_vec(),
            data: vec![value; len],
        })
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> T) -> Result<Self, TensorError> {
        let len = check_shape(shape)?;
        Ok(Tensor {
            shape: shape.to_vec(),
            data: (0..len).map(&mut f).collect(),
        })
    }

    /// Builds a tensor from a shape that was already validated by a kernel.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<T>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Interprets a rank-4 tensor as NHWC.
    pub fn shape4(&self) -> Result<Shape4, TensorError> {
        match *self.shape.as_slice() {
            [n, h, w, c] => Ok(Shape4 { n, h, w, c }),
            _ => Err(TensorError::RankMismatch {
                op: "shape4",
                expected: 4,
                found: self.rank(),
            }),
        }
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Self, TensorError> {
        let expected = check_shape(shape)?;
        if expected != self.data.len() {
            return Err(TensorError::DataLength {
                expected,
                found: self.data.len(),
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data: self.data,
        })
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, factor: T) -> Self {
        self.map(|v| v * factor)
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Elementwise `self += other`.
    pub fn add_assign(&mut self, other: &Tensor<T>) -> Result<(), TensorError> {
        if self.shape != other.shape {
            return Err(TensorError::ShapeMismatch {
                op: "add_assign",
                expected: self.shape.clone(),
                found: other.shape.clone(),
            });
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
        Ok(())
    }

    pub fn fill(&mut self, value: T) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| U::from_f64_lossy(v.as_f64())).collect(),
        }
    }

    /// Slice of the `i`-th entry along the leading axis.
    pub fn outer(&self, i: usize) -> &[T] {
        let stride = self.data.len() / self.shape[0];
        &self.data[i * stride..(i + 1) * stride]
    }
}
