pub mod eval;
pub mod predict;
pub mod summary;
pub mod synth;
pub mod train;

use std::path::{Path, PathBuf};

use pconet_core::data::{load_dataset, CLASS_DIRS};
use pconet_core::metrics::{ClassReport, MetricsReport};
use pconet_core::{scan_dataset, ConfusionMatrix, DataError, LabeledImage, IMAGE_SIZE};

use crate::error::CliError;

type Column = fn(&ClassReport) -> (f64, bool);

pub fn require(value: Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

/// Scans, decodes and resizes a labeled dataset, warning about skipped files.
pub fn load_labeled(root: &Path) -> Result<Vec<LabeledImage>, CliError> {
    let scan = scan_dataset(root)?;
    let (items, failed) = load_dataset(&scan.items, IMAGE_SIZE);
    for s in scan.skipped.iter().chain(&failed) {
        eprintln!("warning: skipping {}: {}", s.path.display(), s.reason);
    }
    for (label, dir) in CLASS_DIRS.iter().enumerate() {
        if !items.iter().any(|i| i.label == label) {
            return Err(DataError::EmptyClass {
                class: dir,
                dir: root.join(dir),
            }
            .into());
        }
    }
    Ok(items)
}

/// The accuracy / precision / recall / F1 block followed by the confusion
/// matrix.
pub fn format_report(report: &MetricsReport, cm: &ConfusionMatrix) -> String {
    let mut out = String::new();
    let mut flagged = false;
    let mut cell = |value: f64, degenerate: bool| {
        flagged |= degenerate;
        format!("{value:.2}{}", if degenerate { "*" } else { "" })
    };
    out.push_str(&format!("{:<12}{:<15}{}\n", "Parameters", "Class", "PCONet"));
    out.push_str(&format!(
        "{:<12}{:<15}{:.2} ({:.2}%)\n",
        "Accuracy",
        "",
        report.accuracy,
        report.accuracy * 100.0
    ));
    let rows: [(&str, Column); 3] = [
        ("Precision", |c| (c.precision, c.degenerate.precision)),
        ("Recall", |c| (c.recall, c.degenerate.recall)),
        ("F1 Score", |c| (c.f1, c.degenerate.f1)),
    ];
    for (title, pick) in rows {
        for (k, class) in report.classes.iter().enumerate() {
            let (value, degenerate) = pick(class);
            let label = if k == 0 { title } else { "" };
            out.push_str(&format!("{label:<12}{:<15}{}\n", class.name, cell(value, degenerate)));
        }
    }
    if flagged {
        out.push_str("* undefined (zero denominator), reported as 0\n");
    }
    out.push_str("\nConfusion matrix (rows: actual, columns: predicted)\n");
    out.push_str(&format!(
        "{:<15}{:>14}{:>14}\n",
        "", cm.class_names[0], cm.class_names[1]
    ));
    for (a, name) in cm.class_names.iter().enumerate() {
        out.push_str(&format!("{name:<15}{:>14}{:>14}\n", cm.get(a, 0), cm.get(a, 1)));
    }
    out
}
