//! PCONet: a small convolutional network for binary classification of
//! ovarian ultrasound images, with every kernel, layer and optimizer written out by
//! hand on CPU.
//!
//! Tensors are NHWC and row-major. The model is generic over [`Scalar`] so the
//! same code runs in `f32` for training and `f64` for gradient checks.

pub mod data;
pub mod gradcheck;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod optim;
pub mod tensor;

pub use data::{scan_dataset, split, DataError, LabeledImage, IMAGE_SIZE};
pub use metrics::{confusion, report, ConfusionMatrix, MetricsError, MetricsReport, CLASS_NAMES};
pub use model::{
    build_pconet, build_pconet_seeded, load_checkpoint, save_checkpoint, train, Model, ModelError, ModelSpec,
    Prediction, TrainConfig, TrainError, PCONET_PARAMS,
};
pub use optim::{AdamConfig, AdamState};
pub use tensor::{Scalar, Tensor, TensorError};
