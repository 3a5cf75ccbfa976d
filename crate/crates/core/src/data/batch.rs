use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{augment, DataError, LabeledImage};
use crate::tensor::Tensor;

/// Stacked images `(b, H, W, 3)` and one-hot labels `(b, 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub images: Tensor<f32>,
    pub labels: Tensor<f32>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.images.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Class index of each row.
    pub fn label_indices(&self) -> Vec<usize> {
        self.labels
            .data()
            .chunks_exact(2)
            .map(|r| if r[0] == 1.0 { 0 } else { 1 })
            .collect()
    }
}

pub fn one_hot(label: usize) -> [f32; 2] {
    let mut row = [0.0; 2];
    row[label] = 1.0;
    row
}

/// Visiting order for one epoch. With a seed the order is a permutation
/// drawn from `seed + epoch`; without one it is the identity.
pub fn epoch_order(n: usize, shuffle_seed: Option<u64>, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(seed) = shuffle_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(epoch as u64));
        order.shuffle(&mut rng);
    }
    order
}

/// Splits an epoch's order into `ceil(n / batch_size)` index groups; the last
/// group may be short.
pub fn batch_plan(
    n: usize,
    batch_size: usize,
    shuffle_seed: Option<u64>,
    epoch: usize,
) -> Result<Vec<Vec<usize>>, DataError> {
    if batch_size == 0 {
        return Err(DataError::InvalidBatchSize);
    }
    if n == 0 {
        return Err(DataError::EmptyDataset);
    }
    Ok(epoch_order(n, shuffle_seed, epoch)
        .chunks(batch_size)
        .map(<[usize]>::to_vec)
        .collect())
}

/// RNG for augmenting the sample at `position` of an epoch's order. Distinct
/// per sample so the result does not depend on which worker assembles it.
pub fn augment_rng(seed: u64, epoch: usize, position: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (epoch as u64).wrapping_mul(0xA076_1D64_78BD_642F));
    rng.set_stream(position as u64);
    rng
}

/// Stacks the selected images. `augment` carries `(seed, epoch, first
/// position)` when training-time augmentation is on.
pub fn assemble_batch(
    items: &[LabeledImage],
    indices: &[usize],
    augment_with: Option<(u64, usize, usize)>,
) -> Result<Batch, DataError> {
    let first = indices.first().map(|&i| &items[i]).ok_or(DataError::EmptyDataset)?;
    let shape = first.pixels.shape().to_vec();
    let mut images = Vec::with_capacity(indices.len() * first.pixels.len());
    let mut labels = Vec::with_capacity(indices.len() * 2);
    for (offset, &i) in indices.iter().enumerate() {
        let item = &items[i];
        if item.pixels.shape() != shape.as_slice() {
            return Err(DataError::ImageShape {
                path: item.path.clone(),
                expected: shape.clone(),
                found: item.pixels.shape().to_vec(),
            });
        }
        match augment_with {
            Some((seed, epoch, start)) => {
                let mut rng = augment_rng(seed, epoch, start + offset);
                images.extend_from_slice(augment(&item.pixels, &mut rng).data());
            }
            None => images.extend_from_slice(item.pixels.data()),
        }
        labels.extend_from_slice(&one_hot(item.label));
    }
    let mut full = vec![indices.len()];
    full.extend_from_slice(&shape);
    Ok(Batch {
        images: Tensor::new(&full, images).map_err(|_| DataError::EmptyDataset)?,
        labels: Tensor::new(&[indices.len(), 2], labels).map_err(|_| DataError::EmptyDataset)?,
    })
}

/// Un-augmented batches for one epoch.
pub fn batches<'a>(
    items: &'a [LabeledImage],
    batch_size: usize,
    shuffle_seed: Option<u64>,
    epoch: usize,
) -> Result<impl Iterator<Item = Result<Batch, DataError>> + 'a, DataError> {
    let plan = batch_plan(items.len(), batch_size, shuffle_seed, epoch)?;
    Ok(plan.into_iter().map(move |idx| assemble_batch(items, &idx, None)))
}

#[cfg(test)]
mod tests {
    use std::path::PathBuf;

    use super::*;

    fn items(n: usize) -> Vec<LabeledImage> {
        (0..n)
            .map(|i| LabeledImage {
                pixels: Tensor::filled(&[2, 2, 3], i as f32 / n as f32).unwrap(),
                label: i % 2,
                path: PathBuf::from(format!("{i}.png")),
            })
            .collect()
    }

    #[test]
    fn batch_counts() {
        let plan = batch_plan(1346, 16, Some(3), 0).unwrap();
        assert_eq!(plan.len(), 85);
        assert_eq!(plan.iter().filter(|b| b.len() == 16).count(), 84);
        assert_eq!(plan.last().unwrap().len(), 2);
        assert_eq!(batch_plan(16, 16, None, 0).unwrap().len(), 1);
    }

    #[test]
    fn epoch_is_a_partition() {
        let plan = batch_plan(100, 16, Some(5), 2).unwrap();
        let mut seen: Vec<usize> = plan.into_iter().flatten().collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn reshuffles_per_epoch() {
        assert_ne!(epoch_order(50, Some(1), 0), epoch_order(50, Some(1), 1));
        assert_eq!(epoch_order(50, Some(1), 4), epoch_order(50, Some(1), 4));
        assert_eq!(epoch_order(5, None, 9), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn one_hot_labels_and_stacking() {
        let data = items(5);
        let all: Vec<Batch> = batches(&data, 2, None, 0).unwrap().collect::<Result<_, _>>().unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(all[0].images.shape(), &[2, 2, 2, 3]);
        assert_eq!(all[0].labels.data(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(all[2].len(), 1);
        for b in &all {
            for row in b.labels.data().chunks(2) {
                assert_eq!(row.iter().sum::<f32>(), 1.0);
            }
        }
        assert_eq!(all[1].label_indices(), vec![0, 1]);
    }

    #[test]
    fn augmentation_is_positional() {
        let data = items(4);
        let a = assemble_batch(&data, &[0, 1, 2, 3], Some((7, 1, 0))).unwrap();
        let b0 = assemble_batch(&data, &[0, 1], Some((7, 1, 0))).unwrap();
        let b1 = assemble_batch(&data, &[2, 3], Some((7, 1, 2))).unwrap();
        assert_eq!(&a.images.data()[..24], b0.images.data());
        assert_eq!(&a.images.data()[24..], b1.images.data());
    }

    #[test]
    fn errors() {
        assert!(matches!(batch_plan(0, 4, None, 0), Err(DataError::EmptyDataset)));
        assert!(matches!(batch_plan(4, 0, None, 0), Err(DataError::InvalidBatchSize)));
    }
}
