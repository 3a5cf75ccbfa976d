use std::path::Path;

use image::{DynamicImage, ImageReader};
use rayon::prelude::*;

use super::{DataError, ImageRef, LabeledImage, Skipped};
use crate::tensor::Tensor;

/// Bilinear resampling of an `(H, W, C)` tensor with half-pixel centers and
/// edge clamping. Resizing to the same dims returns the input unchanged.
pub fn resize_bilinear(image: &Tensor<f32>, out_h: usize, out_w: usize) -> Result<Tensor<f32>, DataError> {
    let (in_h, in_w, c) = match *image.shape() {
        [h, w, c] => (h, w, c),
        _ => return Err(DataError::ZeroArea),
    };
    if out_h == 0 || out_w == 0 {
        return Err(DataError::ZeroArea);
    }
    if (in_h, in_w) == (out_h, out_w) {
        return Ok(image.clone());
    }
    let src = image.data();
    let axis = |out: usize, input: usize| -> Vec<(usize, usize, f32)> {
        let scale = input as f64 / out as f64;
        (0..out)
            .map(|o| {
                let s = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (input - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(input - 1);
                (i0, i1, (s - i0 as f64) as f32)
            })
            .collect()
    };
    let ys = axis(out_h, in_h);
    let xs = axis(out_w, in_w);
    let mut out = Vec::with_capacity(out_h * out_w * c);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for ch in 0..c {
                let at = |y: usize, x: usize| src[(y * in_w + x) * c + ch];
                let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
                let bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
                out.push(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    Tensor::new(&[out_h, out_w, c], out).map_err(|_| DataError::ZeroArea)
}

/// Converts a decoded image to a `(size, size, 3)` tensor in `[0, 1]`:
/// grayscale is replicated to three channels, alpha is dropped, then the
/// image is bilinearly resized.
pub fn preprocess(raw: &DynamicImage, size: usize) -> Result<Tensor<f32>, DataError> {
    let (w, h) = (raw.width() as usize, raw.height() as usize);
    if w == 0 || h == 0 {
        return Err(DataError::ZeroArea);
    }
    let rgb = raw.to_rgb8();
    let data = rgb.as_raw().iter().map(|&v| v as f32 / 255.0).collect();
    let pixels = Tensor::new(&[h, w, 3], data).map_err(|_| DataError::ZeroArea)?;
    resize_bilinear(&pixels, size, size)
}

pub fn load_image(path: &Path, size: usize) -> Result<Tensor<f32>, DataError> {
    let decoded = ImageReader::open(path)
        .map_err(super::io_err(path))?
        .with_guessed_format()
        .map_err(super::io_err(path))?
        .decode()
        .map_err(|e| DataError::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    preprocess(&decoded, size)
}

/// Decodes and preprocesses every reference in parallel; output order
/// follows input order. Files that fail to decode are returned as skipped.
pub fn load_dataset(items: &[ImageRef], size: usize) -> (Vec<LabeledImage>, Vec<Skipped>) {
    let results: Vec<_> = items.par_iter().map(|r| (r, load_image(&r.path, size))).collect();
    let mut images = Vec::with_capacity(items.len());
    let mut skipped = Vec::new();
    for (r, result) in results {
        match result {
            Ok(pixels) => images.push(LabeledImage {
                pixels,
                label: r.label,
                path: r.path.clone(),
            }),
            Err(e) => skipped.push(Skipped {
                path: r.path.clone(),
                reason: e.to_string(),
            }),
        }
    }
    (images, skipped)
}
