//! Small generated datasets for smoke tests and demos: "infected" images
//! carry bright Gaussian blobs on a dark speckled field; "not infected"
//! images are the dark field alone.

use std::path::Path;

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scan::ensure_dir;
use super::{DataError, CLASS_DIRS};

fn dark_field(rng: &mut ChaCha8Rng, side: u32) -> Vec<f32> {
    let base: f32 = rng.gen_range(20.0..45.0);
    (0..side * side).map(|_| base + rng.gen_range(-12.0..12.0)).collect()
}

fn add_blobs(field: &mut [f32], rng: &mut ChaCha8Rng, side: u32) {
    let s = side as f32;
    for _ in 0..rng.gen_range(1..=3) {
        let cx = rng.gen_range(0.25 * s..0.75 * s);
        let cy = rng.gen_range(0.25 * s..0.75 * s);
        let sigma = rng.gen_range(0.07 * s..0.13 * s);
        let amp: f32 = rng.gen_range(170.0..220.0);
        for y in 0..side {
            for x in 0..side {
                let d2 = (x as f32 - cx).powi(2) + (y as f32 - cy).powi(2);
                field[(y * side + x) as usize] += amp * (-d2 / (2.0 * sigma * sigma)).exp();
            }
        }
    }
}

/// Renders one grayscale-looking RGB image of the given class.
pub fn render(label: usize, side: u32, rng: &mut ChaCha8Rng) -> RgbImage {
    let mut field = dark_field(rng, side);
    if label == 0 {
        add_blobs(&mut field, rng, side);
    }
    RgbImage::from_fn(side, side, |x, y| {
        let v = field[(y * side + x) as usize].clamp(0.0, 255.0).round() as u8;
        Rgb([v, v, v])
    })
}

/// Writes `per_class` PNGs into each class directory under `root`.
pub fn write_dataset(root: &Path, per_class: usize, side: u32, seed: u64) -> Result<(), DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (label, dir_name) in CLASS_DIRS.iter().enumerate() {
        let dir = root.join(dir_name);
        ensure_dir(&dir)?;
        for i in 0..per_class {
            let path = dir.join(format!("{dir_name}_{i:03}.png"));
            render(label, side, &mut rng)
                .save(&path)
                .map_err(|e| DataError::Encode {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::scan_dataset;

    #[test]
    fn blobs_are_brighter() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mean =
            |img: &RgbImage| img.pixels().map(|p| p[0] as f64).sum::<f64>() / (img.width() * img.height()) as f64;
        let blob = render(0, 48, &mut rng);
        let field = render(1, 48, &mut rng);
        assert!(mean(&blob) > mean(&field) + 5.0);
        assert!(blob.pixels().map(|p| p[0]).max().unwrap() > 150);
    }

    #[test]
    fn written_dataset_scans() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), 4, 32, 1).unwrap();
        let scan = scan_dataset(dir.path()).unwrap();
        assert_eq!(scan.items.len(), 8);
        assert_eq!(scan.items.iter().filter(|i| i.label == 0).count(), 4);
    }
}
