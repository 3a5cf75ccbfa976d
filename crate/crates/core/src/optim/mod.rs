//! Adam and the binary cross-entropy loss for the two-sigmoid output head.

mod adam;
mod loss;

use std::fmt;

pub use adam::{AdamConfig, AdamState, Moments, NamedParam};
pub use loss::{bce_loss, bce_value, PROB_CLIP};

#[derive(Debug, Clone, PartialEq)]
pub enum OptimError {
    NonFiniteGradient {
        name: String,
    },
    /// Parameter list changed between steps.
    ParamMismatch {
        name: String,
        reason: String,
    },
    ShapeMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    NotOneHot {
        row: usize,
    },
    EmptyBatch,
}

impl fmt::Display for OptimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptimError::NonFiniteGradient { name } => write!(f, "non-finite gradient for parameter {name}"),
            OptimError::ParamMismatch { name, reason } => write!(f, "parameter {name}: {reason}"),
            OptimError::ShapeMismatch { expected, found } => {
                write!(f, "loss inputs differ in shape: {expected:?} vs {found:?}")
            }
            OptimError::NotOneHot { row } => write!(f, "target row {row} is not one-hot"),
            OptimError::EmptyBatch => f.write_str("loss over an empty batch"),
        }
    }
}

impl std::error::Error for OptimError {}
