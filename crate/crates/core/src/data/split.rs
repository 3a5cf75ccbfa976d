use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DataError, Labeled};
use crate::metrics::CLASS_NAMES;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub ratio: f64,
    pub seed: u64,
}

/// Stratified train/validation split. Each class contributes
/// `round(ratio · count)` items to training; both sides must receive at
/// least one item of every class. Items keep their input order on each side.
pub fn split<T: Labeled + Clone>(items: &[T], ratio: f64, seed: u64) -> Result<DatasetSplit<T>, DataError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::InvalidRatio(ratio));
    }
    if items.len() < 2 {
        return Err(DataError::TooFewItems(items.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    for (class, name) in CLASS_NAMES.iter().enumerate() {
        let mut idx: Vec<usize> = (0..items.len()).filter(|&i| items[i].label() == class).collect();
        let count = idx.len();
        let n_train = (ratio * count as f64).round() as usize;
        if n_train == 0 || n_train >= count {
            return Err(DataError::ClassTooSmall {
                class: name,
                count,
                ratio,
            });
        }
        idx.shuffle(&mut rng);
        train_idx.extend_from_slice(&idx[..n_train]);
        val_idx.extend_from_slice(&idx[n_train..]);
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    Ok(DatasetSplit {
        train: train_idx.iter().map(|&i| items[i].clone()).collect(),
        validation: val_idx.iter().map(|&i| items[i].clone()).collect(),
        ratio,
        seed,
    })
}
