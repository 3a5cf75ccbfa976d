use std::fmt;

use pconet_core::model::{CheckpointError, TrainError};
use pconet_core::{DataError, MetricsError};

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(DataError),
    Training(TrainError),
    Checkpoint(CheckpointError),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Training(_) => 4,
            CliError::Checkpoint(_) => 5,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Data(e) => write!(f, "dataset error: {e}"),
            CliError::Training(e) => write!(f, "training error: {e}"),
            CliError::Checkpoint(e) => write!(f, "checkpoint error: {e}"),
            CliError::Other(msg) => f.write_str(msg),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e)
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Checkpoint(e)
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::InvalidConfig(msg) => CliError::Usage(msg),
            TrainError::Data(d) => CliError::Data(d),
            TrainError::EmptyTrainSet | TrainError::EmptyValidationSet => CliError::Data(DataError::EmptyDataset),
            TrainError::Metrics(m) => m.into(),
            other => CliError::Training(other),
        }
    }
}
