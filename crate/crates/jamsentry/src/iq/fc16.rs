//! fc16 capture files: headerless interleaved I,Q as little-endian signed
//! 16-bit integers, scaled by 1/32768 into [-1, 1). Metadata (sample rate,
//! label, scenario) travels in a JSON sidecar named `<file>.meta.json`
//! next to the data, with the data file's extension dropped
//! (`run1/nojam.fc16` -> `run1/nojam.meta.json`).

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::iq::{IQRecording, IQSample, Label, SidecarMeta, Source};

const SCALE: f64 = 32768.0;

/// Path of the sidecar belonging to an fc16 file.
pub fn sidecar_path(data_path: &Path) -> PathBuf {
    data_path.with_extension("meta.json")
}

/// Decode an fc16 file using its JSON sidecar for metadata.
pub fn read_fc16(path: &Path) -> Result<IQRecording> {
    let sidecar = sidecar_path(path);
    let meta: SidecarMeta = serde_json::from_slice(&fs::read(&sidecar).map_err(|e| {
        Error::Format(format!("missing sidecar {}: {e}", sidecar.display()))
    })?)
    .map_err(|e| Error::Format(format!("bad sidecar {}: {e}", sidecar.display())))?;
    read_fc16_with(path, meta.sample_rate_sps, meta.label()?)
}

/// Decode an fc16 file with explicitly supplied metadata (CLI-flag path).
pub fn read_fc16_with(path: &Path, sample_rate_sps: u64, label: Label) -> Result<IQRecording> {
    let bytes = fs::read(path)?;
    if bytes.is_empty() {
        return Err(Error::EmptyInput(format!("{} is empty", path.display())));
    }
    if bytes.len() % 4 != 0 {
        return Err(Error::Format(format!(
            "{}: length {} is not a multiple of 4 (truncated fc16)",
            path.display(),
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(4)
        .map(|w| {
            let i = i16::from_le_bytes([w[0], w[1]]) as f64 / SCALE;
            let q = i16::from_le_bytes([w[2], w[3]]) as f64 / SCALE;
            IQSample::new(i, q)
        })
        .collect();
    IQRecording::new(samples, sample_rate_sps, label, Source::File(path.to_path_buf()))
}

fn quantize(x: f64) -> i16 {
    // saturate outside [-1, 1 - 2^-15]
    let v = (x * SCALE).round();
    if v >= i16::MAX as f64 {
        i16::MAX
    } else if v <= i16::MIN as f64 {
        i16::MIN
    } else {
        v as i16
    }
}

/// Encode a recording as fc16 plus its sidecar. Values representable in
/// int16 round-trip byte-exactly; out-of-range values saturate.
pub fn write_fc16(rec: &IQRecording, path: &Path, scenario: Option<String>) -> Result<()> {
    let mut bytes = Vec::with_capacity(rec.samples.len() * 4);
    for s in &rec.samples {
        bytes.extend_from_slice(&quantize(s.i).to_le_bytes());
        bytes.extend_from_slice(&quantize(s.q).to_le_bytes());
    }
    fs::write(path, bytes)?;
    let meta = SidecarMeta {
        sample_rate_sps: rec.sample_rate_sps,
        label: rec.label.as_str().into(),
        scenario,
    };
    let json = serde_json::to_vec_pretty(&meta)
        .map_err(|e| Error::Format(format!("sidecar encode: {e}")))?;
    fs::write(sidecar_path(path), json)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn decode_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("two.fc16");
        std::fs::write(&p, [0x00u8, 0x40, 0x00, 0xC0]).unwrap();
        let rec = read_fc16_with(&p, 5_000_000, Label::NoJam).unwrap();
        assert_eq!(rec.samples.len(), 1);
        assert_eq!(rec.samples[0], IQSample::new(0.5, -0.5));
    }

    #[test]
    fn empty_file_is_empty_input() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.fc16");
        std::fs::write(&p, []).unwrap();
        assert!(matches!(
            read_fc16_with(&p, 1, Label::NoJam),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn truncated_file_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("trunc.fc16");
        std::fs::write(&p, [0u8; 6]).unwrap();
        assert!(matches!(
            read_fc16_with(&p, 1, Label::NoJam),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn encode_known_values_and_saturation() {
        assert_eq!(quantize(0.5), 0x4000);
        assert_eq!(quantize(-0.5), -0x4000);
        assert_eq!(quantize(2.0), i16::MAX);
        assert_eq!(quantize(-2.0), i16::MIN);
        assert_eq!(quantize(1.0), i16::MAX); // 32768 saturates
    }

    #[test]
    fn read_write_byte_identity_on_random_int16() {
        // round-trip oracle: any file of int16 pairs survives read -> write
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dir = tempfile::tempdir().unwrap();
        for case in 0..20 {
            let n = rng.gen_range(1..200usize);
            let mut bytes = Vec::with_capacity(n * 4);
            for _ in 0..n * 2 {
                bytes.extend_from_slice(&rng.gen::<i16>().to_le_bytes());
            }
            let p = dir.path().join(format!("case{case}.fc16"));
            std::fs::write(&p, &bytes).unwrap();
            let rec = read_fc16_with(&p, 5_000_000, Label::Jam).unwrap();
            let back = dir.path().join(format!("case{case}_back.fc16"));
            write_fc16(&rec, &back, None).unwrap();
            assert_eq!(std::fs::read(&back).unwrap(), bytes, "case {case}");
        }
    }

    #[test]
    fn sidecar_read_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cap.fc16");
        let rec = IQRecording::new(
            vec![IQSample::new(0.25, -0.125); 8],
            2_000_000,
            Label::Jam,
            Source::Synthetic("s".into()),
        )
        .unwrap();
        write_fc16(&rec, &p, Some("exp6".into())).unwrap();
        assert!(dir.path().join("cap.meta.json").exists());
        let back = read_fc16(&p).unwrap();
        assert_eq!(back.sample_rate_sps, 2_000_000);
        assert_eq!(back.label, Label::Jam);
        assert_eq!(back.samples, rec.samples);
    }
}
