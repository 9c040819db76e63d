//! 8-bit grayscale PNG export. Pixel value = round(255 * pixels); rows are
//! flipped vertically so positive Q points up, as in a constellation plot.

use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::GrayImage;

pub fn export_png(img: &GrayImage, path: &Path) -> Result<()> {
    let (w, h) = (img.width(), img.height());
    let mut buf = vec![0u8; w * h];
    for y in 0..h {
        let row = h - 1 - y;
        for x in 0..w {
            buf[y * w + x] = (img.pixel(x, row) * 255.0).round() as u8;
        }
    }
    let out: image::GrayImage = image::ImageBuffer::from_raw(w as u32, h as u32, buf)
        .expect("buffer sized to w*h");
    out.save(path)
        .map_err(|e| Error::Format(format!("png encode {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{histogram_image, AxisLimits};
    use crate::iq::{IQChunk, IQSample, Label};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_image_encodes_to_zeros() {
        let img = GrayImage::from_pixels(6, 4, vec![0.0; 24]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("zero.png");
        export_png(&img, &p).unwrap();
        let back = image::open(&p).unwrap().to_luma8();
        assert!(back.pixels().all(|px| px[0] == 0));
    }

    #[test]
    fn max_bin_is_255_and_roundtrip_within_quantization() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let samples: Vec<IQSample> = (0..2000)
            .map(|_| IQSample::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect();
        let img = histogram_image(
            &IQChunk { samples, label: Label::NoJam },
            24,
            24,
            &AxisLimits::standard(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("hist.png");
        export_png(&img, &p).unwrap();
        let back = image::open(&p).unwrap().to_luma8();
        assert_eq!(back.width(), 24);
        assert_eq!(back.height(), 24);
        let mut max_seen = 0u8;
        for y in 0..24usize {
            for x in 0..24usize {
                let decoded = back.get_pixel(x as u32, (23 - y) as u32)[0] as f64 / 255.0;
                // decode oracle: round-trip within one quantization step
                assert!((decoded - img.pixel(x, y)).abs() <= 1.0 / 255.0 + 1e-12);
                max_seen = max_seen.max(back.get_pixel(x as u32, (23 - y) as u32)[0]);
            }
        }
        assert_eq!(max_seen, 255);
    }
}
