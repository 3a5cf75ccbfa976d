use rand::Rng;

use super::{dropout_forward, Activation, LayerDesc, LayerKind, NnError};
use crate::tensor::{
    conv2d_backward, conv2d_forward, conv_output_dim, matmul, matmul_a_bt, matmul_at_b, maxpool2d_backward,
    maxpool2d_forward, pool_output_dim, relu, relu_backward, sigmoid, sigmoid_backward, Scalar, Tensor,
};

fn invalid(kind: LayerKind, reason: impl Into<String>) -> NnError {
    NnError::InvalidConfig {
        kind,
        reason: reason.into(),
    }
}

fn spatial(kind: LayerKind, input: &[usize]) -> Result<(usize, usize, usize), NnError> {
    match *input {
        [h, w, c] if h > 0 && w > 0 && c > 0 => Ok((h, w, c)),
        _ => Err(invalid(
            kind,
            format!("expected (height, width, channels) input, got {input:?}"),
        )),
    }
}

pub(super) fn output_shape(desc: &LayerDesc, input: &[usize]) -> Result<Vec<usize>, NnError> {
    match *desc {
        LayerDesc::Conv2d {
            filters,
            kernel,
            stride,
        } => {
            let (h, w, _) = spatial(LayerKind::Conv2d, input)?;
            if filters == 0 || kernel == 0 || stride == 0 {
                return Err(invalid(
                    LayerKind::Conv2d,
                    "filters, kernel and stride must be positive",
                ));
            }
            if kernel > h || kernel > w {
                return Err(invalid(
                    LayerKind::Conv2d,
                    format!("{kernel}x{kernel} kernel exceeds {h}x{w} input"),
                ));
            }
            Ok(vec![
                conv_output_dim(h, kernel, stride),
                conv_output_dim(w, kernel, stride),
                filters,
            ])
        }
        LayerDesc::MaxPool2d { pool, stride } => {
            let (h, w, c) = spatial(LayerKind::MaxPool2d, input)?;
            if pool == 0 || stride == 0 {
                return Err(invalid(LayerKind::MaxPool2d, "pool and stride must be positive"));
            }
            if pool > h || pool > w {
                return Err(invalid(
                    LayerKind::MaxPool2d,
                    format!("{pool}x{pool} pool exceeds {h}x{w} input"),
                ));
            }
            Ok(vec![
                pool_output_dim(h, pool, stride),
                pool_output_dim(w, pool, stride),
                c,
            ])
        }
        LayerDesc::Flatten => {
            if input.is_empty() || input.contains(&0) {
                return Err(invalid(LayerKind::Flatten, format!("bad input shape {input:?}")));
            }
            Ok(vec![input.iter().product()])
        }
        LayerDesc::Dense { units } => {
            if units == 0 {
                return Err(invalid(LayerKind::Dense, "units must be positive"));
            }
            if input.len() != 1 || input[0] == 0 {
                return Err(invalid(
                    LayerKind::Dense,
                    format!("expected a flat feature input, got {input:?}"),
                ));
            }
            Ok(vec![units])
        }
        LayerDesc::Activation(_) => Ok(input.to_vec()),
        LayerDesc::Dropout { rate } => {
            if !(0.0..1.0).contains(&rate) {
                return Err(NnError::InvalidRate(rate));
            }
            Ok(input.to_vec())
        }
    }
}

fn with_batch(batch: usize, shape: &[usize]) -> Vec<usize> {
    let mut full = Vec::with_capacity(shape.len() + 1);
    full.push(batch);
    full.extend_from_slice(shape);
    full
}

fn check_grad<T: Scalar>(grad: &Tensor<T>, expected: &[usize]) -> Result<(), NnError> {
    if grad.shape() != expected {
        return Err(NnError::InputShape {
            expected: expected[1..].to_vec(),
            found: grad.shape().to_vec(),
        });
    }
    Ok(())
}

/// Valid-padding 2-D convolution.
#[derive(Debug, Clone)]
pub struct Conv2d<T: Scalar = f32> {
    pub(super) input_shape: Vec<usize>,
    pub(super) filters: usize,
    pub(super) kernel: usize,
    pub(super) stride: usize,
    pub kernels: Tensor<T>,
    pub bias: Tensor<T>,
    pub grad_kernels: Tensor<T>,
    pub grad_bias: Tensor<T>,
    pub(super) cache: Option<Tensor<T>>,
}

impl<T: Scalar> Conv2d<T> {
    pub fn new(input_shape: &[usize], filters: usize, kernel: usize, stride: usize) -> Result<Self, NnError> {
        output_shape(
            &LayerDesc::Conv2d {
                filters,
                kernel,
                stride,
            },
            input_shape,
        )?;
        let cin = input_shape[2];
        let kshape = [kernel, kernel, cin, filters];
        Ok(Conv2d {
            input_shape: input_shape.to_vec(),
            filters,
            kernel,
            stride,
            kernels: Tensor::zeros(&kshape)?,
            bias: Tensor::zeros(&[filters])?,
            grad_kernels: Tensor::zeros(&kshape)?,
            grad_bias: Tensor::zeros(&[filters])?,
            cache: None,
        })
    }

    pub fn filters(&self) -> usize {
        self.filters
    }

    pub fn kernel_size(&self) -> usize {
        self.kernel
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub(super) fn output_shape(&self) -> Vec<usize> {
        output_shape(
            &LayerDesc::Conv2d {
                filters: self.filters,
                kernel: self.kernel,
                stride: self.stride,
            },
            &self.input_shape,
        )
        .expect("validated at construction")
    }

    pub(super) fn infer(&self, input: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        Ok(conv2d_forward(input, &self.kernels, &self.bias, self.stride)?)
    }

    pub(super) fn forward(&mut self, input: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let out = self.infer(input)?;
        self.cache = Some(input.clone());
        Ok(out)
    }

    pub(super) fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let input = self.cache.as_ref().ok_or(NnError::BackwardBeforeForward {
            kind: LayerKind::Conv2d,
        })?;
        check_grad(grad_out, &with_batch(input.shape()[0], &self.output_shape()))?;
        let g = conv2d_backward(input, &self.kernels, grad_out, self.stride)?;
        self.grad_kernels.add_assign(&g.kernels)?;
        self.grad_bias.add_assign(&g.bias)?;
        Ok(g.input)
    }
}

/// Max pooling; the flat argmax per output is cached for backward.
#[derive(Debug, Clone)]
pub struct MaxPool2d {
    pub(super) input_shape: Vec<usize>,
    pub(super) pool: usize,
    pub(super) stride: usize,
    pub(super) cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool2d {
    pub fn new(input_shape: &[usize], pool: usize, stride: usize) -> Result<Self, NnError> {
        output_shape(&LayerDesc::MaxPool2d { pool, stride }, input_shape)?;
        Ok(MaxPool2d {
            input_shape: input_shape.to_vec(),
            pool,
            stride,
            cache: None,
        })
    }

    pub fn pool_size(&self) -> usize {
        self.pool
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub(super) fn output_shape(&self) -> Vec<usize> {
        output_shape(
            &LayerDesc::MaxPool2d {
                pool: self.pool,
                stride: self.stride,
            },
            &self.input_shape,
        )
        .expect("validated at construction")
    }

    pub(super) fn infer<T: Scalar>(&self, input: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        Ok(maxpool2d_forward(input, self.pool, self.stride)?.output)
    }

    pub(super) fn forward<T: Scalar>(&mut self, input: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let out = maxpool2d_forward(input, self.pool, self.stride)?;
        self.cache = Some((out.argmax, input.shape().to_vec()));
        Ok(out.output)
    }

    pub(super) fn backward<T: Scalar>(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let (argmax, in_shape) = self.cache.as_ref().ok_or(NnError::BackwardBeforeForward {
            kind: LayerKind::MaxPool2d,
        })?;
        check_grad(grad_out, &with_batch(in_shape[0], &self.output_shape()))?;
        Ok(maxpool2d_backward(argmax, grad_out, in_shape)?)
    }
}

/// Reshapes `(n, h, w, c)` to `(n, h·w·c)` in row-major (h, w, c) order.
#[derive(Debug, Clone)]
pub struct Flatten {
    pub(super) input_shape: Vec<usize>,
    pub(super) cached_batch: Option<usize>,
}

impl Flatten {
    pub fn new(input_shape: &[usize]) -> Result<Self, NnError> {
        output_shape(&LayerDesc::Flatten, input_shape)?;
        Ok(Flatten {
            input_shape: input_shape.to_vec(),
            cached_batch: None,
        })
    }

    pub(super) fn infer<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let n = input.shape()[0];
        let features = input.len() / n;
        Ok(input.clone().reshape(&[n, features])?)
    }

    pub(super) fn forward<T: Scalar>(&mut self, input: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        self.cached_batch = Some(input.shape()[0]);
        Self::infer(input)
    }

    pub(super) fn backward<T: Scalar>(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let n = self.cached_batch.ok_or(NnError::BackwardBeforeForward {
            kind: LayerKind::Flatten,
        })?;
        check_grad(grad_out, &[n, self.input_shape.iter().product()])?;
        Ok(grad_out.clone().reshape(&with_batch(n, &self.input_shape))?)
    }
}

/// Fully connected layer `y = x·W + b` with `W: [in, out]`.
#[derive(Debug, Clone)]
pub struct Dense<T: Scalar = f32> {
    pub(super) input_shape: Vec<usize>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
    pub grad_weights: Tensor<T>,
    pub grad_bias: Tensor<T>,
    pub(super) cache: Option<Tensor<T>>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(input_shape: &[usize], units: usize) -> Result<Self, NnError> {
        output_shape(&LayerDesc::Dense { units }, input_shape)?;
        let fan_in = input_shape[0];
        Ok(Dense {
            input_shape: input_shape.to_vec(),
            weights: Tensor::zeros(&[fan_in, units])?,
            bias: Tensor::zeros(&[units])?,
            grad_weights: Tensor::zeros(&[fan_in, units])?,
            grad_bias: Tensor::zeros(&[units])?,
            cache: None,
        })
    }

    pub fn units(&self) -> usize {
        self.bias.len()
    }

    pub(super) fn infer(&self, input: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let mut out = matmul(input, &self.weights)?;
        let units = self.units();
        for row in out.data_mut().chunks_exact_mut(units) {
            for (v, &b) in row.iter_mut().zip(self.bias.data()) {
                *v = *v + b;
            }
        }
        Ok(out)
    }

    pub(super) fn forward(&mut self, input: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let out = self.infer(input)?;
        self.cache = Some(input.clone());
        Ok(out)
    }

    pub(super) fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let input = self
            .cache
            .as_ref()
            .ok_or(NnError::BackwardBeforeForward { kind: LayerKind::Dense })?;
        check_grad(grad_out, &[input.shape()[0], self.units()])?;
        self.grad_weights.add_assign(&matmul_at_b(input, grad_out)?)?;
        let units = self.units();
        let gb = self.grad_bias.data_mut();
        for row in grad_out.data().chunks_exact(units) {
            for (acc, &g) in gb.iter_mut().zip(row) {
                *acc = *acc + g;
            }
        }
        Ok(matmul_a_bt(grad_out, &self.weights)?)
    }
}

/// Elementwise activation. ReLU caches its input, sigmoid its output.
#[derive(Debug, Clone)]
pub struct ActivationLayer<T: Scalar = f32> {
    pub(super) shape: Vec<usize>,
    pub(super) activation: Activation,
    pub(super) cache: Option<Tensor<T>>,
}

impl<T: Scalar> ActivationLayer<T> {
    pub fn new(shape: &[usize], activation: Activation) -> Self {
        ActivationLayer {
            shape: shape.to_vec(),
            activation,
            cache: None,
        }
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub(super) fn infer(&self, input: &Tensor<T>) -> Tensor<T> {
        match self.activation {
            Activation::Identity => input.clone(),
            Activation::Relu => relu(input),
            Activation::Sigmoid => sigmoid(input),
        }
    }

    pub(super) fn forward(&mut self, input: &Tensor<T>) -> Tensor<T> {
        let out = self.infer(input);
        self.cache = Some(match self.activation {
            Activation::Sigmoid => out.clone(),
            _ => input.clone(),
        });
        out
    }

    pub(super) fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let cached = self.cache.as_ref().ok_or(NnError::BackwardBeforeForward {
            kind: LayerKind::Activation,
        })?;
        check_grad(grad_out, cached.shape())?;
        Ok(match self.activation {
            Activation::Identity => grad_out.clone(),
            Activation::Relu => relu_backward(cached, grad_out)?,
            Activation::Sigmoid => sigmoid_backward(cached, grad_out)?,
        })
    }
}

/// Inverted dropout: survivors are scaled by `1/(1−rate)` during training.
#[derive(Debug, Clone)]
pub struct Dropout<T: Scalar = f32> {
    pub(super) shape: Vec<usize>,
    pub(super) rate: f64,
    pub(super) mask: Option<Tensor<T>>,
}

impl<T: Scalar> Dropout<T> {
    pub fn new(shape: &[usize], rate: f64) -> Result<Self, NnError> {
        output_shape(&LayerDesc::Dropout { rate }, shape)?;
        Ok(Dropout {
            shape: shape.to_vec(),
            rate,
            mask: None,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Mask from the last forward call, if any.
    pub fn mask(&self) -> Option<&Tensor<T>> {
        self.mask.as_ref()
    }

    pub(super) fn forward<R: Rng + ?Sized>(
        &mut self,
        input: &Tensor<T>,
        training: bool,
        rng: &mut R,
    ) -> Result<Tensor<T>, NnError> {
        let (out, mask) = if training {
            dropout_forward(input, self.rate, rng)?
        } else {
            (input.clone(), Tensor::filled(input.shape(), T::one())?)
        };
        self.mask = Some(mask);
        Ok(out)
    }

    pub(super) fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let mask = self.mask.as_ref().ok_or(NnError::BackwardBeforeForward {
            kind: LayerKind::Dropout,
        })?;
        check_grad(grad_out, mask.shape())?;
        let data = grad_out.data().iter().zip(mask.data()).map(|(&g, &m)| g * m).collect();
        Ok(Tensor::new(grad_out.shape(), data)?)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::super::Layer;
    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(3)
    }

    #[test]
    fn first_conv_shape() {
        let mut layer = Layer::<f32>::build(
            &LayerDesc::Conv2d {
                filters: 32,
                kernel: 3,
                stride: 1,
            },
            &[224, 224, 3],
        )
        .unwrap();
        let x = Tensor::zeros(&[2, 224, 224, 3]).unwrap();
        assert_eq!(
            layer.forward(&x, false, &mut rng()).unwrap().shape(),
            &[2, 222, 222, 32]
        );
    }

    #[test]
    fn flatten_shape() {
        let mut layer = Layer::<f32>::build(&LayerDesc::Flatten, &[5, 5, 128]).unwrap();
        let x = Tensor::from_fn(&[1, 5, 5, 128], |i| i as f32).unwrap();
        let y = layer.forward(&x, true, &mut rng()).unwrap();
        assert_eq!(y.shape(), &[1, 3200]);
        assert_eq!(y.data(), x.data());
        assert_eq!(layer.backward(&y).unwrap(), x);
    }

    #[test]
    fn eval_dropout_is_identity() {
        let mut layer = Layer::<f32>::build(&LayerDesc::Dropout { rate: 0.5 }, &[6]).unwrap();
        let x = Tensor::from_fn(&[3, 6], |i| i as f32 - 4.0).unwrap();
        assert_eq!(layer.forward(&x, false, &mut rng()).unwrap(), x);
        assert_eq!(layer.infer(&x).unwrap(), x);
    }

    #[test]
    fn dropout_backward_reuses_mask() {
        let mut layer = Layer::<f32>::build(&LayerDesc::Dropout { rate: 0.5 }, &[64]).unwrap();
        let x = Tensor::filled(&[2, 64], 1.0).unwrap();
        let y = layer.forward(&x, true, &mut rng()).unwrap();
        let g = layer.backward(&Tensor::filled(&[2, 64], 1.0).unwrap()).unwrap();
        for (yv, gv) in y.data().iter().zip(g.data()) {
            assert_eq!(*yv == 0.0, *gv == 0.0);
        }
        assert!(y.data().contains(&0.0));
    }

    #[test]
    fn identity_activation_passes_gradient() {
        let mut layer = Layer::<f64>::build(&LayerDesc::Activation(Activation::Identity), &[4]).unwrap();
        let x = Tensor::from_fn(&[2, 4], |i| i as f64 - 3.0).unwrap();
        layer.forward(&x, true, &mut rng()).unwrap();
        let g = Tensor::from_fn(&[2, 4], |i| i as f64 * 0.1).unwrap();
        assert_eq!(layer.backward(&g).unwrap(), g);
    }

    #[test]
    fn backward_before_forward() {
        for desc in [
            LayerDesc::Dense { units: 3 },
            LayerDesc::Activation(Activation::Relu),
            LayerDesc::Dropout { rate: 0.1 },
        ] {
            let mut layer = Layer::<f32>::build(&desc, &[4]).unwrap();
            let g = Tensor::zeros(&[1, layer.output_shape()[0]]).unwrap();
            assert!(matches!(layer.backward(&g), Err(NnError::BackwardBeforeForward { .. })));
        }
        let mut conv = Layer::<f32>::build(
            &LayerDesc::Conv2d {
                filters: 1,
                kernel: 3,
                stride: 1,
            },
            &[4, 4, 1],
        )
        .unwrap();
        let g = Tensor::zeros(&[1, 2, 2, 1]).unwrap();
        assert!(matches!(
            conv.backward(&g),
            Err(NnError::BackwardBeforeForward {
                kind: LayerKind::Conv2d
            })
        ));
    }

    #[test]
    fn wrong_input_shape() {
        let mut layer = Layer::<f32>::build(&LayerDesc::Dense { units: 3 }, &[4]).unwrap();
        let x = Tensor::zeros(&[2, 5]).unwrap();
        let err = layer.forward(&x, false, &mut rng()).unwrap_err();
        assert_eq!(
            err,
            NnError::InputShape {
                expected: vec![4],
                found: vec![2, 5]
            }
        );
    }

    #[test]
    fn parameter_counts() {
        let dense = Layer::<f32>::build(&LayerDesc::Dense { units: 128 }, &[3200]).unwrap();
        assert_eq!(dense.param_count(), 3200 * 128 + 128);
        let conv = Layer::<f32>::build(
            &LayerDesc::Conv2d {
                filters: 64,
                kernel: 3,
                stride: 1,
            },
            &[54, 54, 32],
        )
        .unwrap();
        assert_eq!(conv.param_count(), 3 * 3 * 32 * 64 + 64);
        assert_eq!(
            LayerDesc::Conv2d {
                filters: 64,
                kernel: 3,
                stride: 1
            }
            .param_count(&[54, 54, 32]),
            conv.param_count()
        );
    }

    #[test]
    fn invalid_configs() {
        assert!(Layer::<f32>::build(
            &LayerDesc::Conv2d {
                filters: 1,
                kernel: 5,
                stride: 1
            },
            &[4, 4, 1]
        )
        .is_err());
        assert!(Layer::<f32>::build(&LayerDesc::Dense { units: 2 }, &[2, 2, 1]).is_err());
        assert_eq!(
            Layer::<f32>::build(&LayerDesc::Dropout { rate: 1.0 }, &[2]).unwrap_err(),
            NnError::InvalidRate(1.0)
        );
    }
}
