//! The PCONet stack: five conv/pool blocks, a flatten, two ReLU dense layers
//! with dropout, and a two-neuron sigmoid head.

mod checkpoint;
mod spec;
mod train;

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::nn::{init_weights, InitPolicy, Layer, NnError};
use crate::optim::NamedParam;
use crate::tensor::{Scalar, Tensor};

pub use checkpoint::{
    load_checkpoint, load_checkpoint_full, load_checkpoint_with_spec, save_checkpoint, save_checkpoint_full,
    Checkpoint, CheckpointError, TrainingState, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use spec::{format_count, LayerEntry, ModelSpec, SummaryRow};
pub use train::{evaluate, train, train_with_optimizer, EvalSummary, TrainConfig, TrainError, TrainingLog};

/// Parameter count of the full PCONet model.
pub const PCONET_PARAMS: usize = 582_690;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    InvalidSpec(String),
    InputShape {
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    Layer {
        index: usize,
        name: String,
        source: NnError,
    },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::InvalidSpec(msg) => write!(f, "invalid model spec: {msg}"),
            ModelError::InputShape { expected, found } => {
                write!(f, "model expects input (batch, {expected:?}), got {found:?}")
            }
            ModelError::Layer { index, name, source } => write!(f, "layer {index} ({name}): {source}"),
        }
    }
}

impl std::error::Error for ModelError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ModelError::Layer { source, .. } => Some(source),
            _ => None,
        }
    }
}

/// Class decision for one image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: usize,
    pub scores: [f64; 2],
}

impl Prediction {
    pub fn label_name(&self) -> &'static str {
        crate::metrics::CLASS_NAMES[self.label]
    }
}

/// Argmax over the two sigmoid scores; a tie goes to class 0 ("infected").
pub fn decide(scores: [f64; 2]) -> usize {
    if scores[1] > scores[0] {
        1
    } else {
        0
    }
}

#[derive(Debug, Clone)]
pub struct Model<T: Scalar = f32> {
    spec: ModelSpec,
    layers: Vec<Layer<T>>,
    dropout_rng: ChaCha8Rng,
}

/// PCONet with Glorot-initialized weights from seed 0.
pub fn build_pconet() -> Model<f32> {
    build_pconet_seeded(0)
}

pub fn build_pconet_seeded(seed: u64) -> Model<f32> {
    Model::new(ModelSpec::pconet(), InitPolicy::glorot(seed)).expect("the PCONet spec is valid")
}

impl<T: Scalar> Model<T> {
    pub fn new(spec: ModelSpec, init: InitPolicy) -> Result<Self, ModelError> {
        spec.validate()?;
        let mut shape = spec.input_shape.clone();
        let mut layers = Vec::with_capacity(spec.layers.len());
        for (index, entry) in spec.layers.iter().enumerate() {
            let mut layer = Layer::build(&entry.desc, &shape).map_err(|source| ModelError::Layer {
                index,
                name: entry.name.clone(),
                source,
            })?;
            init_weights(&mut layer, &init.for_layer(index));
            shape = layer.output_shape();
            layers.push(layer);
        }
        Ok(Model {
            spec,
            layers,
            dropout_rng: ChaCha8Rng::seed_from_u64(init.seed),
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    /// Restarts the dropout mask stream.
    pub fn reseed_dropout(&mut self, seed: u64) {
        self.dropout_rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    fn check_input(&self, images: &Tensor<T>) -> Result<(), ModelError> {
        if images.rank() != self.spec.input_shape.len() + 1 || images.shape()[1..] != self.spec.input_shape[..] {
            return Err(ModelError::InputShape {
                expected: self.spec.input_shape.clone(),
                found: images.shape().to_vec(),
            });
        }
        Ok(())
    }

    fn wrap(&self, index: usize) -> impl FnOnce(NnError) -> ModelError + '_ {
        move |source| ModelError::Layer {
            index,
            name: self.spec.layers[index].name.clone(),
            source,
        }
    }

    /// Forward pass over a batch, caching activations for [`Model::backward`].
    /// Returns `(n, 2)` sigmoid scores.
    pub fn forward(&mut self, images: &Tensor<T>, training: bool) -> Result<Tensor<T>, ModelError> {
        self.check_input(images)?;
        let mut x = images.clone();
        for index in 0..self.layers.len() {
            let rng = &mut self.dropout_rng;
            match self.layers[index].forward(&x, training, rng) {
                Ok(y) => x = y,
                Err(e) => return Err(self.wrap(index)(e)),
            }
        }
        Ok(x)
    }

    /// Evaluation-mode forward pass; does not touch any cached state.
    pub fn infer(&self, images: &Tensor<T>) -> Result<Tensor<T>, ModelError> {
        self.check_input(images)?;
        let mut x = images.clone();
        for (index, layer) in self.layers.iter().enumerate() {
            x = layer.infer(&x).map_err(self.wrap(index))?;
        }
        Ok(x)
    }

    /// Backpropagates `grad_out` (gradient w.r.t. the output scores) through
    /// every layer, accumulating parameter gradients. Returns the gradient
    /// with respect to the input batch.
    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, ModelError> {
        let mut g = grad_out.clone();
        for index in (0..self.layers.len()).rev() {
            match self.layers[index].backward(&g) {
                Ok(next) => g = next,
                Err(e) => return Err(self.wrap(index)(e)),
            }
        }
        Ok(g)
    }

    pub fn zero_grad(&mut self) {
        self.layers.iter_mut().for_each(Layer::zero_grad);
    }

    pub fn clear_cache(&mut self) {
        self.layers.iter_mut().for_each(Layer::clear_cache);
    }

    /// Parameters as `("<layer>.<param>", tensor)` in layer order.
    pub fn named_params(&self) -> Vec<(String, &Tensor<T>)> {
        self.spec
            .layers
            .iter()
            .zip(&self.layers)
            .flat_map(|(entry, layer)| {
                layer
                    .params()
                    .into_iter()
                    .map(move |(p, t)| (format!("{}.{p}", entry.name), t))
            })
            .collect()
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        self.spec
            .layers
            .iter()
            .zip(self.layers.iter_mut())
            .flat_map(|(entry, layer)| {
                layer
                    .params_mut()
                    .into_iter()
                    .map(move |(p, t)| (format!("{}.{p}", entry.name), t))
            })
            .collect()
    }

    pub fn named_grads(&self) -> Vec<(String, &Tensor<T>)> {
        self.spec
            .layers
            .iter()
            .zip(&self.layers)
            .flat_map(|(entry, layer)| {
                layer
                    .grads()
                    .into_iter()
                    .map(move |(p, t)| (format!("{}.{p}", entry.name), t))
            })
            .collect()
    }

    /// Parameters paired with gradients, ready for an optimizer step.
    pub fn param_grads(&mut self) -> Vec<NamedParam<'_, T>> {
        self.spec
            .layers
            .iter()
            .zip(self.layers.iter_mut())
            .flat_map(|(entry, layer)| {
                layer.param_grads().into_iter().map(move |pg| NamedParam {
                    name: format!("{}.{}", entry.name, pg.name),
                    value: pg.param,
                    grad: pg.grad,
                })
            })
            .collect()
    }

    /// Classifies one `(H, W, 3)` or `(1, H, W, 3)` image.
    pub fn predict(&self, image: &Tensor<T>) -> Result<Prediction, ModelError> {
        let batch = if image.rank() == self.spec.input_shape.len() {
            let mut shape = vec![1];
            shape.extend_from_slice(image.shape());
            image
                .clone()
                .reshape(&shape)
                .expect("adding a unit batch dim keeps the volume")
        } else {
            image.clone()
        };
        let scores = self.infer(&batch)?;
        if scores.shape()[0] != 1 {
            return Err(ModelError::InputShape {
                expected: self.spec.input_shape.clone(),
                found: image.shape().to_vec(),
            });
        }
        let s = [scores.data()[0].as_f64(), scores.data()[1].as_f64()];
        Ok(Prediction {
            label: decide(s),
            scores: s,
        })
    }
}
