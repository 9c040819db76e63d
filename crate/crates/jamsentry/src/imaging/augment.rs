//! Training-set augmentation: three pixel permutations (180-degree
//! rotation, left-right and up-down mirror) and two value transforms
//! (contrast stretch, brightness shift).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AugmentStrategy {
    Rot180,
    FlipLR,
    FlipUD,
    /// pixels' = clamp(c * (pixels - 0.5) + 0.5, 0, 1); c > 1 stretches.
    Contrast { c: f64 },
    /// pixels' = clamp(pixels + b, 0, 1).
    Brightness { b: f64 },
}

impl AugmentStrategy {
    /// Contrast stretch with the default factor 1.5.
    pub fn contrast_default() -> Self {
        AugmentStrategy::Contrast { c: 1.5 }
    }

    /// Brightness shift with the default offset 0.2.
    pub fn brightness_default() -> Self {
        AugmentStrategy::Brightness { b: 0.2 }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rot180" => Ok(Self::Rot180),
            "fliplr" => Ok(Self::FlipLR),
            "flipud" => Ok(Self::FlipUD),
            "contrast" => Ok(Self::contrast_default()),
            "brightness" => Ok(Self::brightness_default()),
            other => Err(Error::Parameter(format!("unknown augmentation {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Rot180 => "rot180",
            Self::FlipLR => "fliplr",
            Self::FlipUD => "flipud",
            Self::Contrast { .. } => "contrast",
            Self::Brightness { .. } => "brightness",
        }
    }
}

fn permute(img: &GrayImage, index: impl Fn(usize, usize) -> (usize, usize)) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let mut pixels = vec![0.0; w * h];
    let mut counts = img.raw_counts().map(|_| vec![0u32; w * h]);
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = index(x, y);
            pixels[y * w + x] = img.pixel(sx, sy);
            if let (Some(c), Some(src)) = (counts.as_mut(), img.raw_counts()) {
                c[y * w + x] = src[sy * w + sx];
            }
        }
    }
    GrayImage::from_parts(w, h, pixels, counts, img.dropped())
}

/// Apply one augmentation strategy, returning a new image.
pub fn augment(img: &GrayImage, strategy: AugmentStrategy) -> Result<GrayImage> {
    let (w, h) = (img.width(), img.height());
    match strategy {
        AugmentStrategy::Rot180 => Ok(permute(img, |x, y| (w - 1 - x, h - 1 - y))),
        AugmentStrategy::FlipLR => Ok(permute(img, |x, y| (w - 1 - x, y))),
        AugmentStrategy::FlipUD => Ok(permute(img, |x, y| (x, h - 1 - y))),
        AugmentStrategy::Contrast { c } => {
            if !(c > 0.0) {
                return Err(Error::Parameter(format!("contrast factor must be > 0, got {c}")));
            }
            let pixels = img
                .pixels()
                .iter()
                .map(|&p| (c * (p - 0.5) + 0.5).clamp(0.0, 1.0))
                .collect();
            Ok(GrayImage::from_parts(w, h, pixels, None, img.dropped()))
        }
        AugmentStrategy::Brightness { b } => {
            if !(b > 0.0) {
                return Err(Error::Parameter(format!("brightness offset must be > 0, got {b}")));
            }
            let pixels = img.pixels().iter().map(|&p| (p + b).clamp(0.0, 1.0)).collect();
            Ok(GrayImage::from_parts(w, h, pixels, None, img.dropped()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{histogram_image, AxisLimits};
    use crate::iq::{IQChunk, IQSample, Label};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<IQSample> = (0..600)
            .map(|_| IQSample::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect();
        histogram_image(
            &IQChunk { samples, label: Label::NoJam },
            17,
            11,
            &AxisLimits::standard(),
        )
        .unwrap()
    }

    fn sorted(v: &[f64]) -> Vec<f64> {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s
    }

    #[test]
    fn permutations_are_involutions_preserving_multisets() {
        let img = random_image(1);
        for strat in [AugmentStrategy::Rot180, AugmentStrategy::FlipLR, AugmentStrategy::FlipUD] {
            let once = augment(&img, strat).unwrap();
            assert_eq!(sorted(once.pixels()), sorted(img.pixels()), "{strat:?} multiset");
            let twice = augment(&once, strat).unwrap();
            assert_eq!(twice, img, "{strat:?} should be an involution");
        }
    }

    #[test]
    fn rot180_equals_fliplr_then_flipud() {
        let img = random_image(2);
        let rot = augment(&img, AugmentStrategy::Rot180).unwrap();
        let seq = augment(&augment(&img, AugmentStrategy::FlipLR).unwrap(), AugmentStrategy::FlipUD).unwrap();
        assert_eq!(rot, seq);
    }

    #[test]
    fn brightness_saturates_to_ones() {
        let img = random_image(3);
        let bright = augment(&img, AugmentStrategy::Brightness { b: 1.0 }).unwrap();
        assert!(bright.pixels().iter().all(|&p| p == 1.0));
    }

    #[test]
    fn value_transforms_stay_in_unit_range() {
        let img = random_image(4);
        for strat in [AugmentStrategy::contrast_default(), AugmentStrategy::brightness_default()] {
            let out = augment(&img, strat).unwrap();
            assert!(out.pixels().iter().all(|&p| (0.0..=1.0).contains(&p)));
            assert!(out.raw_counts().is_none());
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let img = random_image(5);
        assert!(augment(&img, AugmentStrategy::Contrast { c: 0.0 }).is_err());
        assert!(augment(&img, AugmentStrategy::Contrast { c: -1.0 }).is_err());
        assert!(augment(&img, AugmentStrategy::Brightness { b: 0.0 }).is_err());
    }
}
