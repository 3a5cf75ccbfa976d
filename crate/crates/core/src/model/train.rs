use std::fmt;
use std::fs;
use std::ops::ControlFlow;
use std::path::PathBuf;
use std::sync::mpsc;
use std::thread;

use super::{decide, Model, ModelError};
use crate::data::{assemble_batch, batch_plan, Batch, DataError, LabeledImage};
use crate::metrics::{confusion, curve_log_append, ConfusionMatrix, EpochRow, MetricsError, OutputCounts};
use crate::optim::{bce_loss, bce_value, AdamConfig, AdamState, OptimError};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Drives shuffling, augmentation and dropout masks.
    pub seed: u64,
    pub augment: bool,
    /// Batches assembled ahead of the optimizer step; 0 assembles inline.
    pub prefetch: usize,
    /// When set, the file is truncated and one row is appended per epoch.
    pub log_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 16,
            learning_rate: 1e-5,
            seed: 0,
            augment: true,
            prefetch: 2,
            log_path: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug)]
pub enum TrainError {
    InvalidConfig(String),
    EmptyTrainSet,
    EmptyValidationSet,
    NonFiniteLoss { epoch: usize, step: usize, loss: f64 },
    Model(ModelError),
    Optim(OptimError),
    Data(DataError),
    Metrics(MetricsError),
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::InvalidConfig(msg) => write!(f, "invalid training config: {msg}"),
            TrainError::EmptyTrainSet => f.write_str("training set is empty"),
            TrainError::EmptyValidationSet => f.write_str("validation set is empty"),
            TrainError::NonFiniteLoss { epoch, step, loss } => {
                write!(f, "training aborted: loss became {loss} at epoch {epoch}, step {step}")
            }
            TrainError::Model(e) => e.fmt(f),
            TrainError::Optim(e) => e.fmt(f),
            TrainError::Data(e) => e.fmt(f),
            TrainError::Metrics(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for TrainError {}

impl From<ModelError> for TrainError {
    fn from(e: ModelError) -> Self {
        TrainError::Model(e)
    }
}

impl From<OptimError> for TrainError {
    fn from(e: OptimError) -> Self {
        TrainError::Optim(e)
    }
}

impl From<DataError> for TrainError {
    fn from(e: DataError) -> Self {
        TrainError::Data(e)
    }
}

impl From<MetricsError> for TrainError {
    fn from(e: MetricsError) -> Self {
        TrainError::Metrics(e)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub rows: Vec<EpochRow>,
}

/// Loss and classification results of an evaluation-mode pass.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub loss: f64,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub outputs: OutputCounts,
    pub predictions: Vec<usize>,
    pub scores: Vec<[f64; 2]>,
}

/// Runs the model in evaluation mode over `items` in order.
pub fn evaluate(model: &Model<f32>, items: &[LabeledImage], batch_size: usize) -> Result<EvalSummary, TrainError> {
    let plan = batch_plan(items.len(), batch_size, None, 0)?;
    let mut weighted_loss = 0.0;
    let mut outputs = OutputCounts::default();
    let mut predictions = Vec::with_capacity(items.len());
    let mut scores = Vec::with_capacity(items.len());
    for idx in plan {
        let batch = assemble_batch(items, &idx, None)?;
        let probs = model.infer(&batch.images)?;
        weighted_loss += bce_value(&probs, &batch.labels)? * batch.len() as f64;
        let p64: Vec<f64> = probs.data().iter().map(|&v| v as f64).collect();
        let y64: Vec<f64> = batch.labels.data().iter().map(|&v| v as f64).collect();
        outputs.add(&p64, &y64);
        for row in p64.chunks_exact(2) {
            let s = [row[0], row[1]];
            predictions.push(decide(s));
            scores.push(s);
        }
    }
    let actuals: Vec<usize> = items.iter().map(|i| i.label).collect();
    let cm = confusion(&predictions, &actuals)?;
    let correct = predictions.iter().zip(&actuals).filter(|(p, a)| p == a).count();
    Ok(EvalSummary {
        loss: weighted_loss / items.len() as f64,
        accuracy: correct as f64 / items.len() as f64,
        confusion: cm,
        outputs,
        predictions,
        scores,
    })
}

impl Model<f32> {
    /// One optimizer update on a batch; returns the loss before the update.
    /// With `training` false dropout is off, so the step is plain Adam on the
    /// deterministic loss.
    pub fn train_step(
        &mut self,
        batch: &Batch,
        optimizer: &mut AdamState<f32>,
        training: bool,
    ) -> Result<f64, TrainError> {
        self.zero_grad();
        let probs = self.forward(&batch.images, training)?;
        let (loss, grad) = bce_loss(&probs, &batch.labels)?;
        if !loss.is_finite() {
            return Err(TrainError::NonFiniteLoss {
                epoch: 0,
                step: 0,
                loss,
            });
        }
        self.backward(&grad)?;
        optimizer.step(&mut self.param_grads())?;
        Ok(loss)
    }
}

const AUGMENT_SALT: u64 = 0x5EED_A11C_E000_0001;
const DROPOUT_SALT: u64 = 0x5EED_D20F_0000_0002;

/// Trains with a fresh Adam state at `config.learning_rate`.
pub fn train(
    model: &mut Model<f32>,
    train_set: &[LabeledImage],
    val_set: &[LabeledImage],
    config: &TrainConfig,
    on_epoch: impl FnMut(&EpochRow) -> ControlFlow<()>,
) -> Result<(TrainingLog, AdamState<f32>), TrainError> {
    let mut optimizer = AdamState::new(AdamConfig::with_learning_rate(config.learning_rate));
    let log = train_with_optimizer(model, &mut optimizer, train_set, val_set, config, on_epoch)?;
    Ok((log, optimizer))
}

/// Runs `config.epochs` epochs of `ceil(n / batch)` steps each. After every
/// epoch both sets are evaluated in eval mode and a row is logged; the
/// callback may stop training early by returning `Break`.
pub fn train_with_optimizer(
    model: &mut Model<f32>,
    optimizer: &mut AdamState<f32>,
    train_set: &[LabeledImage],
    val_set: &[LabeledImage],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRow) -> ControlFlow<()>,
) -> Result<TrainingLog, TrainError> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::EmptyTrainSet);
    }
    if val_set.is_empty() {
        return Err(TrainError::EmptyValidationSet);
    }
    optimizer.config.learning_rate = config.learning_rate;
    if let Some(path) = &config.log_path {
        fs::write(path, "").map_err(|source| MetricsError::Io {
            path: path.clone(),
            source,
        })?;
    }
    model.reseed_dropout(config.seed ^ DROPOUT_SALT);
    let augment_seed = config.seed ^ AUGMENT_SALT;

    let mut log = TrainingLog::default();
    for epoch in 1..=config.epochs {
        let plan = batch_plan(train_set.len(), config.batch_size, Some(config.seed), epoch)?;
        let augment_at = |start: usize| config.augment.then_some((augment_seed, epoch, start));
        let starts: Vec<usize> = plan
            .iter()
            .scan(0, |pos, idx| {
                let s = *pos;
                *pos += idx.len();
                Some(s)
            })
            .collect();

        let mut run_step = |step: usize, batch: Result<Batch, DataError>| -> Result<(), TrainError> {
            let batch = batch?;
            model
                .train_step(&batch, optimizer, true)
                .map(|_| ())
                .map_err(|e| match e {
                    TrainError::NonFiniteLoss { loss, .. } => TrainError::NonFiniteLoss {
                        epoch,
                        step: step + 1,
                        loss,
                    },
                    other => other,
                })
        };

        if config.prefetch == 0 {
            for (step, idx) in plan.iter().enumerate() {
                run_step(step, assemble_batch(train_set, idx, augment_at(starts[step])))?;
            }
        } else {
            thread::scope(|scope| -> Result<(), TrainError> {
                let (tx, rx) = mpsc::sync_channel(config.prefetch);
                let plan = &plan;
                let starts = &starts;
                scope.spawn(move || {
                    for (step, idx) in plan.iter().enumerate() {
                        if tx
                            .send(assemble_batch(train_set, idx, augment_at(starts[step])))
                            .is_err()
                        {
                            break;
                        }
                    }
                });
                for (step, batch) in rx.iter().enumerate() {
                    run_step(step, batch)?;
                }
                Ok(())
            })?;
        }
        model.clear_cache();

        let train_eval = evaluate(model, train_set, config.batch_size)?;
        let val_eval = evaluate(model, val_set, config.batch_size)?;
        let row = EpochRow {
            epoch,
            train_loss: train_eval.loss,
            train_acc: train_eval.accuracy,
            val_loss: val_eval.loss,
            val_acc: val_eval.accuracy,
            val_precision: val_eval.outputs.precision(),
            val_recall: val_eval.outputs.recall(),
        };
        if let Some(path) = &config.log_path {
            curve_log_append(path, &row)?;
        }
        log.rows.push(row);
        if on_epoch(log.rows.last().expect("just pushed")).is_break() {
            break;
        }
    }
    Ok(log)
}
