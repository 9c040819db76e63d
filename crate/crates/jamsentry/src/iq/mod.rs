//! IQ-domain types: recordings, dataset-level normalization, and chunking.
//!
//! A complex baseband sample is s = I + jQ. Recordings carry the sample rate
//! and a jam/no-jam label; chunks are the fixed-length windows that feed the
//! imaging stage. Normalization is computed over a whole dataset split
//! (I_MAX, Q_MAX are maxima of |I| and |Q|), never per chunk.

pub mod fc16;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One complex baseband sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IQSample {
    /// In-phase (real) component.
    pub i: f64,
    /// Quadrature (imaginary) component.
    pub q: f64,
}

impl IQSample {
    pub const fn new(i: f64, q: f64) -> Self {
        Self { i, q }
    }

    pub fn is_finite(&self) -> bool {
        self.i.is_finite() && self.q.is_finite()
    }

    /// |s|^2
    pub fn power(&self) -> f64 {
        self.i * self.i + self.q * self.q
    }
}

/// Channel condition a recording or chunk was captured under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    NoJam,
    Jam,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::NoJam => "nojam",
            Label::Jam => "jam",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "nojam" => Ok(Label::NoJam),
            "jam" => Ok(Label::Jam),
            other => Err(Error::Format(format!("unknown label {other:?}"))),
        }
    }
}

/// Where a recording came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    File(std::path::PathBuf),
    /// Synthesized by the link simulator; carries the scenario id string.
    Synthetic(String),
}

/// An ordered IQ capture with metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct IQRecording {
    pub samples: Vec<IQSample>,
    pub sample_rate_sps: u64,
    pub label: Label,
    pub source: Source,
}

impl IQRecording {
    /// Build a recording, enforcing the type invariants.
    pub fn new(
        samples: Vec<IQSample>,
        sample_rate_sps: u64,
        label: Label,
        source: Source,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("recording has no samples".into()));
        }
        if sample_rate_sps == 0 {
            return Err(Error::Parameter("sample_rate_sps must be > 0".into()));
        }
        if let Some(bad) = samples.iter().find(|s| !s.is_finite()) {
            return Err(Error::Format(format!(
                "non-finite sample in recording: ({}, {})",
                bad.i, bad.q
            )));
        }
        Ok(Self {
            samples,
            sample_rate_sps,
            label,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean of |s|^2 over the recording.
    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(IQSample::power).sum::<f64>() / self.samples.len() as f64
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_sps as f64
    }
}

/// A window of exactly `n` samples, the unit that becomes one image.
#[derive(Debug, Clone, PartialEq)]
pub struct IQChunk {
    pub samples: Vec<IQSample>,
    pub label: Label,
}

impl IQChunk {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Dataset-level normalization statistics: maxima of |I| and |Q|.
///
/// Absolute values are used so positive and negative excursions scale
/// symmetrically. Stats must come from a whole split, not a single chunk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub i_max: f64,
    pub q_max: f64,
}

impl NormalizationStats {
    pub fn new(i_max: f64, q_max: f64) -> Result<Self> {
        if !(i_max > 0.0) || !(q_max > 0.0) {
            return Err(Error::DegenerateNormalization(format!(
                "i_max={i_max}, q_max={q_max}; both must be > 0"
            )));
        }
        Ok(Self { i_max, q_max })
    }
}

/// Maxima of |I| and |Q| over every sample of every recording.
///
/// Errors if either component is identically zero across the dataset, since
/// dividing by that maximum would be meaningless.
pub fn compute_normalization<'a, R>(recordings: R) -> Result<NormalizationStats>
where
    R: IntoIterator<Item = &'a IQRecording>,
{
    let mut it = recordings.into_iter().peekable();
    if it.peek().is_none() {
        return Err(Error::EmptyInput("no recordings".into()));
    }
    let mut i_max = 0.0f64;
    let mut q_max = 0.0f64;
    for rec in it {
        for s in &rec.samples {
            i_max = i_max.max(s.i.abs());
            q_max = q_max.max(s.q.abs());
        }
    }
    NormalizationStats::new(i_max, q_max)
}

/// Same maxima computed over bare sample slices (used by the per-fold
/// pipeline, where the training split is already chunked).
pub fn compute_normalization_samples<'a, S>(sample_sets: S) -> Result<NormalizationStats>
where
    S: IntoIterator<Item = &'a [IQSample]>,
{
    let mut seen = false;
    let mut i_max = 0.0f64;
    let mut q_max = 0.0f64;
    for set in sample_sets {
        for s in set {
            seen = true;
            i_max = i_max.max(s.i.abs());
            q_max = q_max.max(s.q.abs());
        }
    }
    if !seen {
        return Err(Error::EmptyInput("no samples".into()));
    }
    NormalizationStats::new(i_max, q_max)
}

/// Map every sample to (i / i_max, q / q_max).
pub fn normalize(rec: &IQRecording, stats: &NormalizationStats) -> IQRecording {
    IQRecording {
        samples: normalize_samples(&rec.samples, stats),
        sample_rate_sps: rec.sample_rate_sps,
        label: rec.label,
        source: rec.source.clone(),
    }
}

pub fn normalize_samples(samples: &[IQSample], stats: &NormalizationStats) -> Vec<IQSample> {
    samples
        .iter()
        .map(|s| IQSample::new(s.i / stats.i_max, s.q / stats.q_max))
        .collect()
}

/// Split a recording into consecutive windows of `n` samples.
///
/// The trailing remainder of fewer than `n` samples is discarded; padding it
/// would distort histogram density. Each chunk inherits the recording label.
pub fn chunk(rec: &IQRecording, n: usize) -> Result<Vec<IQChunk>> {
    if n == 0 {
        return Err(Error::Parameter("chunk size n must be > 0".into()));
    }
    Ok(rec
        .samples
        .chunks_exact(n)
        .map(|w| IQChunk {
            samples: w.to_vec(),
            label: rec.label,
        })
        .collect())
}

/// Sidecar metadata for a headerless fc16 capture, stored as
/// `<name>.meta.json` next to the data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarMeta {
    pub sample_rate_sps: u64,
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
}

impl SidecarMeta {
    pub fn label(&self) -> Result<Label> {
        Label::parse(&self.label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rec(samples: Vec<IQSample>) -> IQRecording {
        IQRecording::new(samples, 5_000_000, Label::NoJam, Source::Synthetic("t".into())).unwrap()
    }

    #[test]
    fn normalization_direct_max() {
        let r = rec(vec![IQSample::new(1.0, 2.0), IQSample::new(-3.0, 0.5)]);
        let stats = compute_normalization([&r]).unwrap();
        assert_eq!(stats.i_max, 3.0);
        assert_eq!(stats.q_max, 2.0);
    }

    #[test]
    fn normalization_degenerate_component() {
        let r = rec(vec![IQSample::new(0.0, 1.0)]);
        let err = compute_normalization([&r]).unwrap_err();
        assert!(matches!(err, Error::DegenerateNormalization(_)));
    }

    #[test]
    fn normalization_idempotent_on_normalized_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<IQSample> = (0..500)
            .map(|_| IQSample::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)))
            .collect();
        let r = rec(samples);
        let stats = compute_normalization([&r]).unwrap();
        let normed = normalize(&r, &stats);
        let again = compute_normalization([&normed]).unwrap();
        assert!((again.i_max - 1.0).abs() < 1e-12);
        assert!((again.q_max - 1.0).abs() < 1e-12);
        // post-normalization everything is within [-1, 1]
        assert!(normed
            .samples
            .iter()
            .all(|s| s.i.abs() <= 1.0 && s.q.abs() <= 1.0));
    }

    #[test]
    fn normalize_examples() {
        let stats = NormalizationStats::new(3.0, 2.0).unwrap();
        let r = rec(vec![IQSample::new(3.0, 2.0), IQSample::new(0.0, 0.0)]);
        let n = normalize(&r, &stats);
        assert_eq!(n.samples[0], IQSample::new(1.0, 1.0));
        assert_eq!(n.samples[1], IQSample::new(0.0, 0.0));
    }

    #[test]
    fn chunk_floor_division() {
        let samples: Vec<IQSample> = (0..10).map(|k| IQSample::new(k as f64, 0.5)).collect();
        let r = rec(samples);
        let chunks = chunk(&r, 3).unwrap();
        assert_eq!(chunks.len(), 3);
        assert!(chunks.iter().all(|c| c.len() == 3 && c.label == Label::NoJam));
        // concatenation oracle: chunks reproduce the first floor(len/n)*n samples
        let cat: Vec<IQSample> = chunks.iter().flat_map(|c| c.samples.clone()).collect();
        assert_eq!(cat, r.samples[..9].to_vec());
    }

    #[test]
    fn chunk_zero_is_parameter_error() {
        let r = rec(vec![IQSample::new(1.0, 1.0)]);
        assert!(matches!(chunk(&r, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn chunk_duration_at_link_rate() {
        // 1e5 samples at 5e6 sps span 0.02 s
        let samples = vec![IQSample::new(0.1, 0.1); 100_000];
        let r = rec(samples);
        let chunks = chunk(&r, 100_000).unwrap();
        assert_eq!(chunks.len(), 1);
        assert!((r.duration_secs() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn recording_rejects_empty_and_nonfinite() {
        assert!(matches!(
            IQRecording::new(vec![], 1, Label::Jam, Source::Synthetic("x".into())),
            Err(Error::EmptyInput(_))
        ));
        assert!(IQRecording::new(
            vec![IQSample::new(f64::NAN, 0.0)],
            1,
            Label::Jam,
            Source::Synthetic("x".into())
        )
        .is_err());
    }

    #[test]
    fn sidecar_roundtrip() {
        let meta = SidecarMeta {
            sample_rate_sps: 5_000_000,
            label: "jam".into(),
            scenario: Some("exp4".into()),
        };
        let json = serde_json::to_string(&meta).unwrap();
        let back: SidecarMeta = serde_json::from_str(&json).unwrap();
        assert_eq!(back, meta);
        assert_eq!(back.label().unwrap(), Label::Jam);
    }
}
