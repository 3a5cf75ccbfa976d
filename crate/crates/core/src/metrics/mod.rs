//! Confusion matrices, per-class precision/recall/F1 and the per-epoch
//! training curve log.

mod curves;

use std::fmt;
use std::io;
use std::path::PathBuf;

use serde::Serialize;

pub use curves::{curve_log_append, emit_curves_svg, read_curve_log, EpochRow, CURVE_FILES, LOG_HEADER};

/// Class names by index. Index 0 is the positive ("infected") class.
pub const CLASS_NAMES: [&str; 2] = ["infected", "not infected"];

#[derive(Debug)]
pub enum MetricsError {
    LengthMismatch { predictions: usize, actuals: usize },
    LabelOutOfRange { position: usize, label: usize },
    EmptyMatrix,
    DuplicateEpoch(usize),
    MalformedRow { line: u64, message: String },
    EmptyLog,
    Io { path: PathBuf, source: io::Error },
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::LengthMismatch { predictions, actuals } => {
                write!(f, "{predictions} predictions but {actuals} actual labels")
            }
            MetricsError::LabelOutOfRange { position, label } => {
                write!(f, "label {label} at position {position} is not a class index (0 or 1)")
            }
            MetricsError::EmptyMatrix => f.write_str("confusion matrix has no samples"),
            MetricsError::DuplicateEpoch(e) => write!(f, "epoch {e} is already present in the log"),
            MetricsError::MalformedRow { line, message } => write!(f, "malformed log row at line {line}: {message}"),
            MetricsError::EmptyLog => f.write_str("training log has no epoch rows"),
            MetricsError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for MetricsError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            MetricsError::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

/// `counts[actual][predicted]` for the two classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
    pub class_names: [String; 2],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; 2]; 2]) -> Self {
        ConfusionMatrix {
            counts,
            class_names: CLASS_NAMES.map(String::from),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual][predicted]
    }

    /// The same matrix with the two class indices exchanged.
    pub fn swapped(&self) -> Self {
        let c = self.counts;
        ConfusionMatrix {
            counts: [[c[1][1], c[1][0]], [c[0][1], c[0][0]]],
            class_names: [self.class_names[1].clone(), self.class_names[0].clone()],
        }
    }
}

/// Tallies `(actual, predicted)` pairs.
pub fn confusion(predictions: &[usize], actuals: &[usize]) -> Result<ConfusionMatrix, MetricsError> {
    if predictions.len() != actuals.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            actuals: actuals.len(),
        });
    }
    let mut counts = [[0u64; 2]; 2];
    for (position, (&p, &a)) in predictions.iter().zip(actuals).enumerate() {
        for label in [p, a] {
            if label > 1 {
                return Err(MetricsError::LabelOutOfRange { position, label });
            }
        }
        counts[a][p] += 1;
    }
    Ok(ConfusionMatrix::from_counts(counts))
}

/// Set when a metric's denominator was zero and the value was reported as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Degenerate {
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
}

impl Degenerate {
    pub fn any(&self) -> bool {
        self.precision || self.recall || self.f1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub degenerate: Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub classes: [ClassReport; 2],
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Accuracy and per-class precision, recall and F1.
pub fn report(cm: &ConfusionMatrix) -> Result<MetricsReport, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    let c = &cm.counts;
    let class = |k: usize| {
        let predicted_k = c[0][k] + c[1][k];
        let actual_k = c[k][0] + c[k][1];
        let (precision, dp) = ratio(c[k][k], predicted_k);
        let (recall, dr) = ratio(c[k][k], actual_k);
        let (f1, df) = if precision + recall == 0.0 {
            (0.0, true)
        } else {
            (2.0 * precision * recall / (precision + recall), false)
        };
        ClassReport {
            name: cm.class_names[k].clone(),
            precision,
            recall,
            f1,
            support: actual_k,
            degenerate: Degenerate {
                precision: dp,
                recall: dr,
                f1: df,
            },
        }
    };
    Ok(MetricsReport {
        accuracy: (c[0][0] + c[1][1]) as f64 / total as f64,
        classes: [class(0), class(1)],
    })
}

/// Micro-averaged counts over thresholded sigmoid outputs: every output
/// neuron of every sample is one binary decision (`score > 0.5`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OutputCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

impl OutputCounts {
    pub const THRESHOLD: f64 = 0.5;

    pub fn add(&mut self, scores: &[f64], targets: &[f64]) {
        for (&s, &y) in scores.iter().zip(targets) {
            let predicted = s > Self::THRESHOLD;
            let actual = y > 0.5;
            match (predicted, actual) {
                (true, true) => self.true_pos += 1,
                (true, false) => self.false_pos += 1,
                (false, true) => self.false_neg += 1,
                (false, false) => {}
            }
        }
    }

    pub fn precision(&self) -> f64 {
        ratio(self.true_pos, self.true_pos + self.false_pos).0
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_pos, self.true_pos + self.false_neg).0
    }
}
