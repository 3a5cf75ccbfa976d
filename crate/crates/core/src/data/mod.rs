//! Dataset loading: directory scan, decode and resize, augmentation,
//! stratified split, and batch assembly.
//!
//! Images live under `<root>/infected/` and `<root>/not_infected/`. Pixels are
//! `(H, W, 3)` tensors scaled into `[0, 1]`.

mod augment;
mod batch;
mod preprocess;
mod scan;
mod split;
pub mod synthetic;

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use crate::tensor::Tensor;

pub use augment::{augment, hflip, AugmentParams};
pub use batch::{assemble_batch, augment_rng, batch_plan, batches, epoch_order, one_hot, Batch};
pub use preprocess::{load_dataset, load_image, preprocess, resize_bilinear};
pub use scan::{scan_dataset, ScanResult, Skipped};
pub use split::{split, DatasetSplit};

/// Side length images are resized to.
pub const IMAGE_SIZE: usize = 224;

/// On-disk directory for each class index.
pub const CLASS_DIRS: [&str; 2] = ["infected", "not_infected"];

#[derive(Debug)]
pub enum DataError {
    MissingClassDir(PathBuf),
    EmptyClass {
        class: &'static str,
        dir: PathBuf,
    },
    Io {
        path: PathBuf,
        source: io::Error,
    },
    Decode {
        path: PathBuf,
        message: String,
    },
    ZeroArea,
    InvalidRatio(f64),
    TooFewItems(usize),
    ClassTooSmall {
        class: &'static str,
        count: usize,
        ratio: f64,
    },
    EmptyDataset,
    InvalidBatchSize,
    ImageShape {
        path: PathBuf,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    Encode {
        path: PathBuf,
        message: String,
    },
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::MissingClassDir(dir) => write!(f, "missing class directory {}", dir.display()),
            DataError::EmptyClass { class, dir } => {
                write!(f, "empty class `{class}`: no decodable images in {}", dir.display())
            }
            DataError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            DataError::Decode { path, message } => write!(f, "cannot decode {}: {message}", path.display()),
            DataError::ZeroArea => f.write_str("image has zero area"),
            DataError::InvalidRatio(r) => write!(f, "split ratio {r} must lie strictly between 0 and 1"),
            DataError::TooFewItems(n) => write!(f, "need at least 2 items to split, got {n}"),
            DataError::ClassTooSmall { class, count, ratio } => write!(
                f,
                "class `{class}` has {count} item(s), too few for both sides of a {ratio} split"
            ),
            DataError::EmptyDataset => f.write_str("dataset is empty"),
            DataError::InvalidBatchSize => f.write_str("batch size must be at least 1"),
            DataError::ImageShape { path, expected, found } => write!(
                f,
                "{}: image shape {found:?} differs from batch shape {expected:?}",
                path.display()
            ),
            DataError::Encode { path, message } => write!(f, "cannot write {}: {message}", path.display()),
        }
    }
}

impl std::error::Error for DataError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            DataError::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A file found by [`scan_dataset`], not yet decoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRef {
    pub path: PathBuf,
    pub label: usize,
}

/// A decoded, preprocessed image.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    /// `(H, W, 3)`, values in `[0, 1]`.
    pub pixels: Tensor<f32>,
    pub label: usize,
    pub path: PathBuf,
}

/// Anything carrying a class index, so [`split`] can stratify it.
pub trait Labeled {
    fn label(&self) -> usize;
}

impl Labeled for ImageRef {
    fn label(&self) -> usize {
        self.label
    }
}

impl Labeled for LabeledImage {
    fn label(&self) -> usize {
        self.label
    }
}
