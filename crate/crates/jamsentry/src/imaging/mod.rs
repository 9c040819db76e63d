//! Constellation-plane imaging: each IQ chunk becomes a P x Q grayscale
//! bi-variate histogram. The I component selects the column, Q the row;
//! bins are half-open with a closed top edge, out-of-range samples are
//! dropped and tallied. Pixel values are the bin counts normalized by the
//! per-image maximum into [0, 1].

pub mod augment;
pub mod cache;
pub mod png;

pub use augment::{augment, AugmentStrategy};

use crate::error::{Error, Result};
use crate::iq::IQChunk;
use crate::linksim::ModScheme;

/// Default image side: 224 x 224 = 50,176 pixels, the detector input width.
pub const DEFAULT_IMAGE_SIDE: usize = 224;

/// Constellation-plane window for binning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisLimits {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl AxisLimits {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<Self> {
        if !(x_lo < x_hi) || !(y_lo < y_hi) {
            return Err(Error::Parameter(format!(
                "axis limits must satisfy lo < hi, got x [{x_lo}, {x_hi}], y [{y_lo}, {y_hi}]"
            )));
        }
        Ok(Self { x_lo, x_hi, y_lo, y_hi })
    }

    /// The [-2, 2] x [-2, 2] window used for normalized whole-constellation
    /// images; works for every modulation scheme.
    pub fn standard() -> Self {
        Self { x_lo: -2.0, x_hi: 2.0, y_lo: -2.0, y_hi: 2.0 }
    }
}

/// Single-cloud windows of the prior-art imaging variant, centered on one
/// constellation cloud per modulation scheme.
pub fn legacy_limits(scheme: ModScheme) -> AxisLimits {
    match scheme {
        ModScheme::Bpsk => AxisLimits { x_lo: 0.0, x_hi: 2.0, y_lo: -1.0, y_hi: 1.0 },
        ModScheme::Qpsk => AxisLimits { x_lo: -0.293, x_hi: 1.707, y_lo: -1.0, y_hi: 1.0 },
        ModScheme::Qam16 => AxisLimits { x_lo: -0.867, x_hi: 2.133, y_lo: -1.5, y_hi: 1.5 },
        ModScheme::Qam64 => AxisLimits { x_lo: -0.883, x_hi: 2.117, y_lo: -1.5, y_hi: 1.5 },
    }
}

/// A P x Q grayscale image. `pixels` is row-major (row y, column x) in
/// [0, 1]; for histogram outputs `raw_counts` holds the bin counts and
/// `pixels = raw_counts / max(raw_counts)` (all zero when the image is
/// empty). Value-transforming augmentations clear `raw_counts`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    raw_counts: Option<Vec<u32>>,
    dropped: u64,
}

impl GrayImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn raw_counts(&self) -> Option<&[u32]> {
        self.raw_counts.as_deref()
    }

    /// Samples that fell outside the axis limits.
    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn pixel(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn count(&self, x: usize, y: usize) -> Option<u32> {
        self.raw_counts.as_ref().map(|c| c[y * self.width + x])
    }

    /// Total samples binned into the image.
    pub fn count_sum(&self) -> Option<u64> {
        self.raw_counts
            .as_ref()
            .map(|c| c.iter().map(|&v| v as u64).sum())
    }

    /// Drop the bin counts, keeping only the pixel plane (halves the
    /// footprint of large training sets).
    pub fn without_counts(mut self) -> Self {
        self.raw_counts = None;
        self
    }

    /// Build directly from pixel values in [0, 1] (no histogram provenance).
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Shape(format!(
                "pixel buffer {} does not match {width}x{height}",
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Parameter("pixels must lie in [0, 1]".into()));
        }
        Ok(Self { width, height, pixels, raw_counts: None, dropped: 0 })
    }

    pub(crate) fn from_parts(
        width: usize,
        height: usize,
        pixels: Vec<f64>,
        raw_counts: Option<Vec<u32>>,
        dropped: u64,
    ) -> Self {
        Self { width, height, pixels, raw_counts, dropped }
    }
}

/// Count chunk samples into a P x Q grid over `limits`.
///
/// A sample lands in bin (floor((i - x_lo) * P / (x_hi - x_lo)),
/// floor((q - y_lo) * Q / (y_hi - y_lo))); samples exactly on the upper
/// edge go to the last bin. Anything outside the window is dropped and
/// tallied. The multiply-before-divide form keeps exact-integer bin
/// boundaries exact in floating point.
pub fn histogram_image(chunk: &IQChunk, p: usize, q: usize, limits: &AxisLimits) -> Result<GrayImage> {
    if p < 2 || q < 2 {
        return Err(Error::Parameter(format!(
            "image dimensions must be at least 2x2, got {p}x{q}"
        )));
    }
    let x_span = limits.x_hi - limits.x_lo;
    let y_span = limits.y_hi - limits.y_lo;
    let mut counts = vec![0u32; p * q];
    let mut dropped = 0u64;
    for s in &chunk.samples {
        if s.i < limits.x_lo || s.i > limits.x_hi || s.q < limits.y_lo || s.q > limits.y_hi {
            dropped += 1;
            continue;
        }
        let xi = (((s.i - limits.x_lo) * p as f64) / x_span).floor() as usize;
        let yi = (((s.q - limits.y_lo) * q as f64) / y_span).floor() as usize;
        let xi = xi.min(p - 1); // closed top edge
        let yi = yi.min(q - 1);
        counts[yi * p + xi] += 1;
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    let pixels = if max == 0 {
        vec![0.0; p * q]
    } else {
        counts.iter().map(|&c| c as f64 / max as f64).collect()
    };
    Ok(GrayImage::from_parts(p, q, pixels, Some(counts), dropped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iq::{IQSample, Label};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chunk_of(samples: Vec<IQSample>) -> IQChunk {
        IQChunk { samples, label: Label::NoJam }
    }

    #[test]
    fn four_samples_at_origin_land_in_center_bin() {
        let c = chunk_of(vec![IQSample::new(0.0, 0.0); 4]);
        let img = histogram_image(&c, 224, 224, &AxisLimits::standard()).unwrap();
        assert_eq!(img.count(112, 112), Some(4));
        assert_eq!(img.count_sum(), Some(4));
        assert_eq!(img.dropped(), 0);
        assert_eq!(img.pixel(112, 112), 1.0);
        assert_eq!(img.pixels().iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn out_of_range_samples_are_dropped() {
        let c = chunk_of(vec![IQSample::new(3.0, 3.0); 10]);
        let img = histogram_image(&c, 16, 16, &AxisLimits::standard()).unwrap();
        assert_eq!(img.dropped(), 10);
        assert_eq!(img.count_sum(), Some(0));
        assert!(img.pixels().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn edges_lower_closed_upper_closed_into_last_bin() {
        let c = chunk_of(vec![
            IQSample::new(-2.0, -2.0),
            IQSample::new(2.0, 2.0),
            IQSample::new(2.0, -2.0),
        ]);
        let img = histogram_image(&c, 8, 8, &AxisLimits::standard()).unwrap();
        assert_eq!(img.count(0, 0), Some(1));
        assert_eq!(img.count(7, 7), Some(1));
        assert_eq!(img.count(7, 0), Some(1));
        assert_eq!(img.dropped(), 0);
    }

    #[test]
    fn too_small_grid_is_parameter_error() {
        let c = chunk_of(vec![IQSample::new(0.0, 0.0)]);
        assert!(matches!(
            histogram_image(&c, 1, 224, &AxisLimits::standard()),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn conservation_against_naive_counting_oracle() {
        // independent oracle: per-sample scan over all bins on a small grid
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (p, q) = (13, 9);
        let lim = AxisLimits::new(-1.5, 1.0, -0.5, 2.0).unwrap();
        for _ in 0..25 {
            let n = rng.gen_range(1..400usize);
            let samples: Vec<IQSample> = (0..n)
                .map(|_| IQSample::new(rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..3.0)))
                .collect();
            let img = histogram_image(&chunk_of(samples.clone()), p, q, &lim).unwrap();

            let dx = (lim.x_hi - lim.x_lo) / p as f64;
            let dy = (lim.y_hi - lim.y_lo) / q as f64;
            let mut oracle = vec![0u32; p * q];
            let mut oracle_dropped = 0u64;
            for s in &samples {
                let mut placed = false;
                for yi in 0..q {
                    for xi in 0..p {
                        // membership by explicit interval test; top edge closed
                        let x0 = lim.x_lo + xi as f64 * dx;
                        let x1 = if xi == p - 1 { lim.x_hi } else { lim.x_lo + (xi + 1) as f64 * dx };
                        let y0 = lim.y_lo + yi as f64 * dy;
                        let y1 = if yi == q - 1 { lim.y_hi } else { lim.y_lo + (yi + 1) as f64 * dy };
                        let in_x = s.i >= x0 && (s.i < x1 || (xi == p - 1 && s.i <= x1));
                        let in_y = s.q >= y0 && (s.q < y1 || (yi == q - 1 && s.q <= y1));
                        if in_x && in_y {
                            oracle[yi * p + xi] += 1;
                            placed = true;
                        }
                    }
                }
                if !placed {
                    oracle_dropped += 1;
                }
            }
            assert_eq!(img.count_sum().unwrap() + img.dropped(), n as u64);
            assert_eq!(img.dropped(), oracle_dropped);
            assert_eq!(img.raw_counts().unwrap(), oracle.as_slice());
        }
    }

    #[test]
    fn order_independence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<IQSample> = (0..500)
            .map(|_| IQSample::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect();
        let img = histogram_image(&chunk_of(samples.clone()), 32, 32, &AxisLimits::standard()).unwrap();
        let mut rev = samples;
        rev.reverse();
        let img2 = histogram_image(&chunk_of(rev), 32, 32, &AxisLimits::standard()).unwrap();
        assert_eq!(img, img2);
    }

    #[test]
    fn translation_by_one_bin_shifts_counts() {
        // delta = 4/16 = 0.25 is exactly representable, so the shifted
        // samples stay well inside their bins
        let (p, q) = (16, 16);
        let lim = AxisLimits::standard();
        let dx = (lim.x_hi - lim.x_lo) / p as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<IQSample> = (0..300)
            .map(|_| {
                let bx = rng.gen_range(1..(p - 2)) as f64;
                let by = rng.gen_range(0..q) as f64;
                IQSample::new(
                    lim.x_lo + (bx + 0.3 + rng.gen_range(0.0..0.4)) * dx,
                    lim.y_lo + (by + 0.3 + rng.gen_range(0.0..0.4)) * dx,
                )
            })
            .collect();
        let base = histogram_image(&chunk_of(samples.clone()), p, q, &lim).unwrap();
        let shifted: Vec<IQSample> = samples.iter().map(|s| IQSample::new(s.i + dx, s.q)).collect();
        let moved = histogram_image(&chunk_of(shifted), p, q, &lim).unwrap();
        for yi in 0..q {
            for xi in 1..p - 1 {
                assert_eq!(base.count(xi, yi), moved.count(xi + 1, yi), "bin ({xi},{yi})");
            }
        }
    }

    #[test]
    fn legacy_limits_match_published_windows() {
        let b = legacy_limits(ModScheme::Bpsk);
        assert_eq!((b.x_lo, b.x_hi, b.y_lo, b.y_hi), (0.0, 2.0, -1.0, 1.0));
        let q = legacy_limits(ModScheme::Qpsk);
        assert_eq!((q.x_lo, q.x_hi, q.y_lo, q.y_hi), (-0.293, 1.707, -1.0, 1.0));
        let q16 = legacy_limits(ModScheme::Qam16);
        assert_eq!((q16.x_lo, q16.x_hi, q16.y_lo, q16.y_hi), (-0.867, 2.133, -1.5, 1.5));
        let q64 = legacy_limits(ModScheme::Qam64);
        assert_eq!((q64.x_lo, q64.x_hi, q64.y_lo, q64.y_hi), (-0.883, 2.117, -1.5, 1.5));
        for s in [ModScheme::Bpsk, ModScheme::Qpsk, ModScheme::Qam16, ModScheme::Qam64] {
            let l = legacy_limits(s);
            assert!(l.x_lo < l.x_hi && l.y_lo < l.y_hi);
        }
    }
}
