use rand::Rng;

use crate::tensor::Tensor;

/// One draw of the geometric augmentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentParams {
    pub flip: bool,
    /// Rotation in degrees, counter-clockwise.
    pub angle_deg: f64,
    /// Scale factor; above 1 magnifies.
    pub zoom: f64,
}

impl AugmentParams {
    pub const MAX_ANGLE_DEG: f64 = 10.0;
    pub const MAX_ZOOM: f64 = 0.10;

    pub fn identity() -> Self {
        AugmentParams {
            flip: false,
            angle_deg: 0.0,
            zoom: 1.0,
        }
    }

    /// Flip with probability 1/2, angle uniform in ±10°, zoom uniform in ±10%.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        AugmentParams {
            flip: rng.gen_bool(0.5),
            angle_deg: rng.gen_range(-Self::MAX_ANGLE_DEG..=Self::MAX_ANGLE_DEG),
            zoom: 1.0 + rng.gen_range(-Self::MAX_ZOOM..=Self::MAX_ZOOM),
        }
    }

    /// Rotates and zooms about the image center, sampling bilinearly with
    /// edge replication, then mirrors if `flip` is set. Output is clamped to
    /// `[0, 1]`.
    pub fn apply(&self, image: &Tensor<f32>) -> Tensor<f32> {
        let [h, w, c] = match *image.shape() {
            [h, w, c] => [h, w, c],
            _ => panic!("augment expects an (H, W, C) image"),
        };
        let warped = if self.angle_deg == 0.0 && self.zoom == 1.0 {
            image.clone()
        } else {
            let (sin, cos) = self.angle_deg.to_radians().sin_cos();
            let cy = (h as f64 - 1.0) / 2.0;
            let cx = (w as f64 - 1.0) / 2.0;
            let src = image.data();
            let mut out = Vec::with_capacity(image.len());
            for y in 0..h {
                for x in 0..w {
                    let (dx, dy) = ((x as f64 - cx) / self.zoom, (y as f64 - cy) / self.zoom);
                    // inverse rotation maps output coordinates back into the source
                    let sx = (cos * dx + sin * dy + cx).clamp(0.0, (w - 1) as f64);
                    let sy = (-sin * dx + cos * dy + cy).clamp(0.0, (h - 1) as f64);
                    let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
                    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
                    let (fx, fy) = ((sx - x0 as f64) as f32, (sy - y0 as f64) as f32);
                    for ch in 0..c {
                        let at = |yy: usize, xx: usize| src[(yy * w + xx) * c + ch];
                        let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
                        let bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
                        out.push((top * (1.0 - fy) + bottom * fy).clamp(0.0, 1.0));
                    }
                }
            }
            Tensor::new(image.shape(), out).expect("same shape as input")
        };
        if self.flip {
            hflip(&warped)
        } else {
            warped
        }
    }
}

/// Mirrors an `(H, W, C)` image left to right.
pub fn hflip(image: &Tensor<f32>) -> Tensor<f32> {
    let [h, w, c] = match *image.shape() {
        [h, w, c] => [h, w, c],
        _ => panic!("hflip expects an (H, W, C) image"),
    };
    let src = image.data();
    let mut out = Vec::with_capacity(src.len());
    for y in 0..h {
        for x in (0..w).rev() {
            let start = (y * w + x) * c;
            out.extend_from_slice(&src[start..start + c]);
        }
    }
    Tensor::new(image.shape(), out).expect("same shape as input")
}

/// Random flip, rotation and zoom drawn from `rng`.
pub fn augment<R: Rng + ?Sized>(image: &Tensor<f32>, rng: &mut R) -> Tensor<f32> {
    AugmentParams::sample(rng).apply(image)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn sample_image() -> Tensor<f32> {
        Tensor::from_fn(&[12, 10, 3], |i| ((i * 37) % 101) as f32 / 100.0).unwrap()
    }

    #[test]
    fn double_flip_is_identity() {
        let img = sample_image();
        assert_ne!(hflip(&img), img);
        assert_eq!(hflip(&hflip(&img)), img);
    }

    #[test]
    fn identity_params() {
        let img = sample_image();
        assert_eq!(AugmentParams::identity().apply(&img), img);
    }

    #[test]
    fn deterministic_under_seed() {
        let img = sample_image();
        let a = augment(&img, &mut ChaCha8Rng::seed_from_u64(9));
        let b = augment(&img, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn params_in_range_and_output_clamped() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = sample_image();
        for _ in 0..50 {
            let p = AugmentParams::sample(&mut rng);
            assert!(p.angle_deg.abs() <= 10.0);
            assert!((0.9..=1.1).contains(&p.zoom));
            assert!(p.apply(&img).data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn constant_image_unchanged_by_warp() {
        let img = Tensor::filled(&[16, 16, 3], 0.3f32).unwrap();
        let p = AugmentParams {
            flip: true,
            angle_deg: 7.5,
            zoom: 0.92,
        };
        assert!(p.apply(&img).data().iter().all(|&v| (v - 0.3).abs() < 1e-6));
    }
}
