//! Layers with hand-derived backward passes.
//!
//! A [`Layer`] is built from a [`LayerDesc`] and the per-sample shape it will
//! receive (batch dim excluded). Its parameter shapes are fixed at that point.
//! `forward` caches whatever `backward` needs; `infer` is the side-effect free
//! evaluation path.

mod dropout;
mod init;
mod layers;

use std::fmt;

use rand::Rng;

use crate::tensor::{Scalar, Tensor, TensorError};

pub use dropout::dropout_forward;
pub use init::{glorot_limit, init_weights, InitPolicy, InitScheme};
pub use layers::{ActivationLayer, Conv2d, Dense, Dropout, Flatten, MaxPool2d};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Conv2d,
    MaxPool2d,
    Flatten,
    Dense,
    Activation,
    Dropout,
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            LayerKind::Conv2d => "Conv2D",
            LayerKind::MaxPool2d => "MaxPool2D",
            LayerKind::Flatten => "Flatten",
            LayerKind::Dense => "Dense",
            LayerKind::Activation => "Activation",
            LayerKind::Dropout => "Dropout",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

impl Activation {
    /// Name as printed in the model summary.
    pub fn label(self) -> &'static str {
        match self {
            Activation::Identity => "Linear",
            Activation::Relu => "ReLu",
            Activation::Sigmoid => "Sigmoid",
        }
    }
}

/// Hyperparameters of one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerDesc {
    Conv2d {
        filters: usize,
        kernel: usize,
        stride: usize,
    },
    MaxPool2d {
        pool: usize,
        stride: usize,
    },
    Flatten,
    Dense {
        units: usize,
    },
    Activation(Activation),
    Dropout {
        rate: f64,
    },
}

impl LayerDesc {
    pub fn kind(&self) -> LayerKind {
        match self {
            LayerDesc::Conv2d { .. } => LayerKind::Conv2d,
            LayerDesc::MaxPool2d { .. } => LayerKind::MaxPool2d,
            LayerDesc::Flatten => LayerKind::Flatten,
            LayerDesc::Dense { .. } => LayerKind::Dense,
            LayerDesc::Activation(_) => LayerKind::Activation,
            LayerDesc::Dropout { .. } => LayerKind::Dropout,
        }
    }

    /// Per-sample output shape for a per-sample input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        layers::output_shape(self, input)
    }

    /// Trainable scalar count for the given per-sample input shape.
    pub fn param_count(&self, input: &[usize]) -> usize {
        match *self {
            LayerDesc::Conv2d { filters, kernel, .. } => {
                let cin = input.last().copied().unwrap_or(0);
                kernel * kernel * cin * filters + filters
            }
            LayerDesc::Dense { units } => {
                let fan_in: usize = input.iter().product();
                fan_in * units + units
            }
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NnError {
    Tensor(TensorError),
    /// Per-sample input shape differs from the one the layer was built for.
    InputShape {
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    BackwardBeforeForward {
        kind: LayerKind,
    },
    InvalidRate(f64),
    InvalidConfig {
        kind: LayerKind,
        reason: String,
    },
}

impl fmt::Display for NnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NnError::Tensor(e) => e.fmt(f),
            NnError::InputShape { expected, found } => {
                write!(f, "expected input shape (batch, {expected:?}), found {found:?}")
            }
            NnError::BackwardBeforeForward { kind } => {
                write!(f, "{kind} backward called without a cached forward pass")
            }
            NnError::InvalidRate(r) => write!(f, "dropout rate {r} outside [0, 1)"),
            NnError::InvalidConfig { kind, reason } => write!(f, "invalid {kind} layer: {reason}"),
        }
    }
}

impl std::error::Error for NnError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            NnError::Tensor(e) => Some(e),
            _ => None,
        }
    }
}

impl From<TensorError> for NnError {
    fn from(e: TensorError) -> Self {
        NnError::Tensor(e)
    }
}

/// A parameter together with its accumulated gradient.
pub struct ParamGrad<'a, T: Scalar> {
    pub name: &'static str,
    pub param: &'a mut Tensor<T>,
    pub grad: &'a Tensor<T>,
}

#[derive(Debug, Clone)]
pub enum Layer<T: Scalar = f32> {
    Conv2d(Conv2d<T>),
    MaxPool2d(MaxPool2d),
    Flatten(Flatten),
    Dense(Dense<T>),
    Activation(ActivationLayer<T>),
    Dropout(Dropout<T>),
}

impl<T: Scalar> Layer<T> {
    /// Builds a layer with zeroed parameters for the given per-sample input.
    pub fn build(desc: &LayerDesc, input_shape: &[usize]) -> Result<Self, NnError> {
        Ok(match *desc {
            LayerDesc::Conv2d {
                filters,
                kernel,
                stride,
            } => Layer::Conv2d(Conv2d::new(input_shape, filters, kernel, stride)?),
            LayerDesc::MaxPool2d { pool, stride } => Layer::MaxPool2d(MaxPool2d::new(input_shape, pool, stride)?),
            LayerDesc::Flatten => Layer::Flatten(Flatten::new(input_shape)?),
            LayerDesc::Dense { units } => Layer::Dense(Dense::new(input_shape, units)?),
            LayerDesc::Activation(a) => Layer::Activation(ActivationLayer::new(input_shape, a)),
            LayerDesc::Dropout { rate } => Layer::Dropout(Dropout::new(input_shape, rate)?),
        })
    }

    pub fn kind(&self) -> LayerKind {
        match self {
            Layer::Conv2d(_) => LayerKind::Conv2d,
            Layer::MaxPool2d(_) => LayerKind::MaxPool2d,
            Layer::Flatten(_) => LayerKind::Flatten,
            Layer::Dense(_) => LayerKind::Dense,
            Layer::Activation(_) => LayerKind::Activation,
            Layer::Dropout(_) => LayerKind::Dropout,
        }
    }

    pub fn input_shape(&self) -> &[usize] {
        match self {
            Layer::Conv2d(l) => &l.input_shape,
            Layer::MaxPool2d(l) => &l.input_shape,
            Layer::Flatten(l) => &l.input_shape,
            Layer::Dense(l) => &l.input_shape,
            Layer::Activation(l) => &l.shape,
            Layer::Dropout(l) => &l.shape,
        }
    }

    pub fn output_shape(&self) -> Vec<usize> {
        match self {
            Layer::Conv2d(l) => l.output_shape(),
            Layer::MaxPool2d(l) => l.output_shape(),
            Layer::Flatten(l) => vec![l.input_shape.iter().product()],
            Layer::Dense(l) => vec![l.units()],
            Layer::Activation(l) => l.shape.clone(),
            Layer::Dropout(l) => l.shape.clone(),
        }
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<(), NnError> {
        if input.rank() < 2 || &input.shape()[1..] != self.input_shape() {
            return Err(NnError::InputShape {
                expected: self.input_shape().to_vec(),
                found: input.shape().to_vec(),
            });
        }
        Ok(())
    }

    /// Forward pass that caches state for [`Layer::backward`]. Dropout is
    /// only active when `training` is true.
    pub fn forward<R: Rng + ?Sized>(
        &mut self,
        input: &Tensor<T>,
        training: bool,
        rng: &mut R,
    ) -> Result<Tensor<T>, NnError> {
        self.check_input(input)?;
        match self {
            Layer::Conv2d(l) => l.forward(input),
            Layer::MaxPool2d(l) => l.forward(input),
            Layer::Flatten(l) => l.forward(input),
            Layer::Dense(l) => l.forward(input),
            Layer::Activation(l) => Ok(l.forward(input)),
            Layer::Dropout(l) => l.forward(input, training, rng),
        }
    }

    /// Evaluation-mode forward pass without caching.
    pub fn infer(&self, input: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        self.check_input(input)?;
        match self {
            Layer::Conv2d(l) => l.infer(input),
            Layer::MaxPool2d(l) => l.infer(input),
            Layer::Flatten(_) => Flatten::infer(input),
            Layer::Dense(l) => l.infer(input),
            Layer::Activation(l) => Ok(l.infer(input)),
            Layer::Dropout(_) => Ok(input.clone()),
        }
    }

    /// Propagates `grad_out` to the layer input, adding parameter gradients
    /// into the layer's gradient buffers.
    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        match self {
            Layer::Conv2d(l) => l.backward(grad_out),
            Layer::MaxPool2d(l) => l.backward(grad_out),
            Layer::Flatten(l) => l.backward(grad_out),
            Layer::Dense(l) => l.backward(grad_out),
            Layer::Activation(l) => l.backward(grad_out),
            Layer::Dropout(l) => l.backward(grad_out),
        }
    }

    pub fn params(&self) -> Vec<(&'static str, &Tensor<T>)> {
        match self {
            Layer::Conv2d(l) => vec![("kernel", &l.kernels), ("bias", &l.bias)],
            Layer::Dense(l) => vec![("weight", &l.weights), ("bias", &l.bias)],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<(&'static str, &mut Tensor<T>)> {
        match self {
            Layer::Conv2d(l) => vec![("kernel", &mut l.kernels), ("bias", &mut l.bias)],
            Layer::Dense(l) => vec![("weight", &mut l.weights), ("bias", &mut l.bias)],
            _ => Vec::new(),
        }
    }

    pub fn grads(&self) -> Vec<(&'static str, &Tensor<T>)> {
        match self {
            Layer::Conv2d(l) => vec![("kernel", &l.grad_kernels), ("bias", &l.grad_bias)],
            Layer::Dense(l) => vec![("weight", &l.grad_weights), ("bias", &l.grad_bias)],
            _ => Vec::new(),
        }
    }

    pub fn param_grads(&mut self) -> Vec<ParamGrad<'_, T>> {
        match self {
            Layer::Conv2d(l) => vec![
                ParamGrad {
                    name: "kernel",
                    param: &mut l.kernels,
                    grad: &l.grad_kernels,
                },
                ParamGrad {
                    name: "bias",
                    param: &mut l.bias,
                    grad: &l.grad_bias,
                },
            ],
            Layer::Dense(l) => vec![
                ParamGrad {
                    name: "weight",
                    param: &mut l.weights,
                    grad: &l.grad_weights,
                },
                ParamGrad {
                    name: "bias",
                    param: &mut l.bias,
                    grad: &l.grad_bias,
                },
            ],
            _ => Vec::new(),
        }
    }

    pub fn zero_grad(&mut self) {
        match self {
            Layer::Conv2d(l) => {
                l.grad_kernels.fill(T::zero());
                l.grad_bias.fill(T::zero());
            }
            Layer::Dense(l) => {
                l.grad_weights.fill(T::zero());
                l.grad_bias.fill(T::zero());
            }
            _ => {}
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|(_, t)| t.len()).sum()
    }

    /// Drops cached activations.
    pub fn clear_cache(&mut self) {
        match self {
            Layer::Conv2d(l) => l.cache = None,
            Layer::MaxPool2d(l) => l.cache = None,
            Layer::Flatten(l) => l.cached_batch = None,
            Layer::Dense(l) => l.cache = None,
            Layer::Activation(l) => l.cache = None,
            Layer::Dropout(l) => l.mask = None,
        }
    }
}
