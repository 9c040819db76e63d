//! Scenario configs, the weak-jamming admissibility check, and dataset
//! generation for the experiment harness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iq::{chunk, IQChunk, Label};
use crate::linksim::jammer::{gen_jammer, mix, JammerKind, MixAccounting};
use crate::linksim::modem::{demodulate, modulate, symbol_error_rate, ModScheme, OfdmParams};
use crate::linksim::{random_bits, rng_stream, splitmix};

/// Gap in symbol-error rate (jam minus no-jam) below which a scenario
/// counts as weak jamming.
pub const WEAK_REGIME_SER_GAP: f64 = 0.01;

/// Full description of one synthetic link + jammer experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scheme: ModScheme,
    pub ofdm: OfdmParams,
    pub snr_db: f64,
    /// Jammer power relative to signal power at the receiver, dB. Ignored
    /// when `jammer` is `None`.
    pub jsr_db: f64,
    pub jammer: JammerKind,
    /// Jammer oversampling ratio: jammer sample rate / link sample rate.
    pub jor: f64,
    pub duration_samples: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.ofdm.validate()?;
        if self.duration_samples == 0 {
            return Err(Error::Parameter("duration_samples must be > 0".into()));
        }
        if !(self.jor > 0.0) {
            return Err(Error::Parameter(format!("jor must be > 0, got {}", self.jor)));
        }
        Ok(())
    }

    /// Compact id used in `Source::Synthetic` and manifests.
    pub fn id(&self) -> String {
        format!(
            "{}-snr{}-jsr{}-{}-jor{}-seed{}",
            self.scheme.name(),
            self.snr_db,
            self.jsr_db,
            self.jammer.name(),
            self.jor,
            self.seed
        )
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scheme: ModScheme::Bpsk,
            ofdm: OfdmParams::default(),
            snr_db: 15.0,
            jsr_db: 0.0,
            jammer: JammerKind::Awgn,
            jor: 1.0,
            duration_samples: 1_000_000,
            seed: 0,
        }
    }
}

/// Result of the weak-jamming admissibility check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakRegimeCheck {
    pub weak: bool,
    pub ser_jam: f64,
    pub ser_nojam: f64,
}

const MIN_CHECK_SYMBOLS: usize = 10_000;

// seed streams used by the generator
const STREAM_CHECK_BITS: u64 = 1;
const STREAM_CHECK_JAM: u64 = 2;
const STREAM_CHECK_NOISE: u64 = 3;
const STREAM_DATA_BITS: u64 = 16;
const STREAM_DATA_JAM: u64 = 17;
const STREAM_DATA_NOISE: u64 = 18;

/// Run the link with and without the jammer over the same signal and noise
/// realization and compare symbol-error rates. The config is `weak` when
/// jamming raises the SER by at most one percentage point.
pub fn check_weak_regime(cfg: &ScenarioConfig) -> Result<WeakRegimeCheck> {
    cfg.validate()?;
    let sym_len = cfg.ofdm.symbol_len();
    let n_ofdm = cfg.duration_samples / sym_len;
    let data_symbols = n_ofdm * cfg.ofdm.n_data_subcarriers;
    if data_symbols < MIN_CHECK_SYMBOLS {
        return Err(Error::Parameter(format!(
            "duration_samples {} yields {} data symbols; the weak-regime check needs at least {}",
            cfg.duration_samples, data_symbols, MIN_CHECK_SYMBOLS
        )));
    }

    let mut bit_rng = rng_stream(cfg.seed, STREAM_CHECK_BITS);
    let bits = random_bits(&mut bit_rng, n_ofdm * cfg.ofdm.bits_per_ofdm_symbol(cfg.scheme));
    let signal = modulate(&bits, cfg.scheme, &cfg.ofdm)?;

    let jammer = match cfg.jammer {
        JammerKind::None => None,
        kind => Some(gen_jammer(&kind, 1.0, signal.len(), cfg.jor, splitmix(cfg.seed, STREAM_CHECK_JAM))?),
    };

    let noise_seed = splitmix(cfg.seed, STREAM_CHECK_NOISE);
    let jam_out = mix(&signal, jammer.as_ref(), cfg.snr_db, cfg.jsr_db, noise_seed)?;
    let nojam_out = mix(&signal, None, cfg.snr_db, cfg.jsr_db, noise_seed)?;

    let rx_jam = demodulate(&jam_out.recording, cfg.scheme, &cfg.ofdm)?;
    let rx_nojam = demodulate(&nojam_out.recording, cfg.scheme, &cfg.ofdm)?;
    let ser_jam = symbol_error_rate(&bits, &rx_jam, cfg.scheme);
    let ser_nojam = symbol_error_rate(&bits, &rx_nojam, cfg.scheme);

    Ok(WeakRegimeCheck {
        weak: ser_jam - ser_nojam <= WEAK_REGIME_SER_GAP,
        ser_jam,
        ser_nojam,
    })
}

/// One labeled window plus its measured symbol-error rate (from generator
/// bookkeeping), the input to the low-BER filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkRecord {
    pub chunk: IQChunk,
    pub ser: f64,
}

/// A balanced synthetic dataset of raw (unnormalized) chunks.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub records: Vec<ChunkRecord>,
    pub accounting_nojam: MixAccounting,
    pub accounting_jam: Option<MixAccounting>,
    pub scenario_id: String,
}

impl Dataset {
    pub fn class_counts(&self) -> (usize, usize) {
        let jam = self.records.iter().filter(|r| r.chunk.label == Label::Jam).count();
        (self.records.len() - jam, jam)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GenOptions {
    /// Reject the scenario unless it passes the weak-regime check.
    pub require_weak: bool,
}

/// Generate `n_images_per_class` chunks of `n_per_image` samples for each
/// class (NoJam first, then Jam when the scenario has a jammer).
/// Deterministic in (cfg, seed).
pub fn gen_dataset(
    cfg: &ScenarioConfig,
    n_per_image: usize,
    n_images_per_class: usize,
    opts: GenOptions,
) -> Result<Dataset> {
    cfg.validate()?;
    if n_per_image == 0 || n_images_per_class == 0 {
        return Err(Error::Parameter("n_per_image and n_images_per_class must be > 0".into()));
    }
    if opts.require_weak {
        // run the check on an adequately long probe regardless of dataset size
        let mut probe = cfg.clone();
        probe.duration_samples = probe
            .duration_samples
            .max(2 * MIN_CHECK_SYMBOLS / cfg.ofdm.n_data_subcarriers * cfg.ofdm.symbol_len() + cfg.ofdm.symbol_len());
        let check = check_weak_regime(&probe)?;
        if !check.weak {
            return Err(Error::ScenarioRejected {
                ser_jam: check.ser_jam,
                ser_nojam: check.ser_nojam,
                limit: WEAK_REGIME_SER_GAP,
            });
        }
    }

    let needed = n_per_image * n_images_per_class;
    let mut records = Vec::with_capacity(2 * n_images_per_class);
    let mut accounting_nojam = None;
    let mut accounting_jam = None;

    let classes: &[Label] = match cfg.jammer {
        JammerKind::None => &[Label::NoJam],
        _ => &[Label::NoJam, Label::Jam],
    };
    for (ci, &label) in classes.iter().enumerate() {
        let ci = ci as u64;
        let sym_len = cfg.ofdm.symbol_len();
        let n_ofdm = needed.div_ceil(sym_len);
        let mut bit_rng = rng_stream(cfg.seed, STREAM_DATA_BITS + 8 * ci);
        let bits = random_bits(&mut bit_rng, n_ofdm * cfg.ofdm.bits_per_ofdm_symbol(cfg.scheme));
        let signal = modulate(&bits, cfg.scheme, &cfg.ofdm)?;

        let jammer = if label == Label::Jam {
            Some(gen_jammer(
                &cfg.jammer,
                1.0,
                signal.len(),
                cfg.jor,
                splitmix(cfg.seed, STREAM_DATA_JAM + 8 * ci),
            )?)
        } else {
            None
        };
        let out = mix(
            &signal,
            jammer.as_ref(),
            cfg.snr_db,
            cfg.jsr_db,
            splitmix(cfg.seed, STREAM_DATA_NOISE + 8 * ci),
        )?;

        // per-OFDM-symbol error flags for per-chunk SER bookkeeping
        let rx = demodulate(&out.recording, cfg.scheme, &cfg.ofdm)?;
        let bps = cfg.scheme.bits_per_symbol();
        let per_ofdm = cfg.ofdm.bits_per_ofdm_symbol(cfg.scheme);
        let sym_errors: Vec<(usize, usize)> = (0..n_ofdm)
            .map(|s| {
                let errs = (0..cfg.ofdm.n_data_subcarriers)
                    .filter(|&d| {
                        let a = s * per_ofdm + d * bps;
                        bits[a..a + bps] != rx[a..a + bps]
                    })
                    .count();
                (errs, cfg.ofdm.n_data_subcarriers)
            })
            .collect();

        let mut sliced = out.recording.clone();
        sliced.samples.truncate(needed);
        for (k, c) in chunk(&sliced, n_per_image)?.into_iter().enumerate() {
            let start = k * n_per_image;
            let end = start + n_per_image;
            let first_sym = start / sym_len;
            let last_sym = (end - 1) / sym_len;
            let (mut errs, mut total) = (0usize, 0usize);
            for s in first_sym..=last_sym.min(n_ofdm - 1) {
                errs += sym_errors[s].0;
                total += sym_errors[s].1;
            }
            records.push(ChunkRecord {
                chunk: IQChunk { samples: c.samples, label },
                ser: if total == 0 { 0.0 } else { errs as f64 / total as f64 },
            });
        }
        match label {
            Label::NoJam => accounting_nojam = Some(out.accounting),
            Label::Jam => accounting_jam = Some(out.accounting),
        }
    }

    Ok(Dataset {
        records,
        accounting_nojam: accounting_nojam.expect("nojam class always generated"),
        accounting_jam,
        scenario_id: cfg.id(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(snr_db: f64, jsr_db: f64, jammer: JammerKind) -> ScenarioConfig {
        ScenarioConfig {
            snr_db,
            jsr_db,
            jammer,
            duration_samples: 20_000 * 80 / 48 + 80,
            seed: 99,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn no_jammer_is_trivially_weak() {
        let check = check_weak_regime(&cfg(15.0, 0.0, JammerKind::None)).unwrap();
        assert!(check.weak);
        assert_eq!(check.ser_jam, check.ser_nojam);
    }

    #[test]
    fn strong_jamming_is_rejected() {
        let check = check_weak_regime(&cfg(20.0, 20.0, JammerKind::Awgn)).unwrap();
        assert!(!check.weak, "ser_jam={} ser_nojam={}", check.ser_jam, check.ser_nojam);
    }

    #[test]
    fn low_jsr_bpsk_is_weak() {
        let check = check_weak_regime(&cfg(15.0, -10.0, JammerKind::Awgn)).unwrap();
        assert!(check.weak, "ser_jam={} ser_nojam={}", check.ser_jam, check.ser_nojam);
        assert!(check.ser_jam - check.ser_nojam < 0.01);
    }

    #[test]
    fn too_short_duration_is_parameter_error() {
        let mut c = cfg(15.0, 0.0, JammerKind::None);
        c.duration_samples = 800;
        assert!(matches!(check_weak_regime(&c), Err(Error::Parameter(_))));
    }

    #[test]
    fn dataset_is_deterministic_and_balanced() {
        let c = cfg(15.0, 0.0, JammerKind::Awgn);
        let a = gen_dataset(&c, 1000, 12, GenOptions::default()).unwrap();
        let b = gen_dataset(&c, 1000, 12, GenOptions::default()).unwrap();
        assert_eq!(a.records, b.records);
        let (nojam, jam) = a.class_counts();
        assert_eq!((nojam, jam), (12, 12));
        assert!(a.records.iter().all(|r| r.chunk.len() == 1000));
        assert!(a.accounting_jam.is_some());
    }

    #[test]
    fn require_weak_rejects_strong_scenarios() {
        let c = cfg(20.0, 20.0, JammerKind::Awgn);
        let err = gen_dataset(&c, 1000, 4, GenOptions { require_weak: true }).unwrap_err();
        assert!(matches!(err, Error::ScenarioRejected { .. }));
    }

    #[test]
    fn require_weak_accepts_weak_scenarios() {
        let c = cfg(15.0, -10.0, JammerKind::Awgn);
        let ds = gen_dataset(&c, 1000, 4, GenOptions { require_weak: true }).unwrap();
        assert_eq!(ds.records.len(), 8);
    }

    #[test]
    fn nojam_only_scenario_has_single_class() {
        let c = cfg(15.0, 0.0, JammerKind::None);
        let ds = gen_dataset(&c, 500, 5, GenOptions::default()).unwrap();
        let (nojam, jam) = ds.class_counts();
        assert_eq!((nojam, jam), (5, 0));
        assert!(ds.accounting_jam.is_none());
    }

    #[test]
    fn per_chunk_ser_is_low_without_jamming_high_with_strong_jamming() {
        let weak = gen_dataset(&cfg(15.0, -20.0, JammerKind::Awgn), 2000, 6, GenOptions::default()).unwrap();
        for r in &weak.records {
            assert!(r.ser < 0.01, "weak scenario chunk ser {}", r.ser);
        }
        let strong = gen_dataset(&cfg(15.0, 15.0, JammerKind::Awgn), 2000, 6, GenOptions::default()).unwrap();
        let jam_sers: Vec<f64> = strong
            .records
            .iter()
            .filter(|r| r.chunk.label == Label::Jam)
            .map(|r| r.ser)
            .collect();
        assert!(jam_sers.iter().all(|&s| s > 0.05), "jam chunk sers {jam_sers:?}");
    }
}
