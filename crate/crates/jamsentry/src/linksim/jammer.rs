//! Jamming signals and channel mixing.
//!
//! AWGN jammers are complex Gaussian; deceptive jammers run the same OFDM
//! modulator as the legitimate link on random bits. A jammer oversampling
//! ratio (JOR) other than 1 synthesizes the jammer at `jor` times the link
//! rate and resamples to the link rate by nearest-sample selection.
//! Generated blocks are scaled so their measured mean power equals the
//! requested power exactly, which makes the realized SNR/JSR of `mix`
//! exact by construction.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iq::{IQRecording, IQSample, Label, Source};
use crate::linksim::modem::{modulate, ModScheme, OfdmParams};
use crate::linksim::{db_to_linear, random_bits, rng_stream, LINK_SAMPLE_RATE_SPS};

/// What the adversary transmits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JammerKind {
    None,
    Awgn,
    /// Same modulation chain as the link, with the given subcarrier scheme.
    Deceptive(ModScheme),
}

impl JammerKind {
    pub fn name(&self) -> String {
        match self {
            JammerKind::None => "none".into(),
            JammerKind::Awgn => "awgn".into(),
            JammerKind::Deceptive(s) => format!("deceptive-{}", s.name()),
        }
    }
}

fn scale_to_power(samples: &mut [IQSample], power: f64) {
    if power == 0.0 {
        samples.iter_mut().for_each(|s| *s = IQSample::new(0.0, 0.0));
        return;
    }
    let measured = samples.iter().map(IQSample::power).sum::<f64>() / samples.len() as f64;
    if measured > 0.0 {
        let g = (power / measured).sqrt();
        for s in samples.iter_mut() {
            s.i *= g;
            s.q *= g;
        }
    }
}

/// Nearest-sample rate conversion from `jor * link_rate` down/up to the
/// link rate: output[k] = synth[round(k * jor)].
fn resample_nearest(synth: &[IQSample], n: usize, jor: f64) -> Vec<IQSample> {
    (0..n)
        .map(|k| {
            let idx = (k as f64 * jor).round() as usize;
            synth[idx.min(synth.len() - 1)]
        })
        .collect()
}

/// Generate `n` link-rate samples of jamming at the given linear power.
pub fn gen_jammer(kind: &JammerKind, power: f64, n: usize, jor: f64, seed: u64) -> Result<IQRecording> {
    if n == 0 {
        return Err(Error::Parameter("jammer length must be > 0".into()));
    }
    if power < 0.0 {
        return Err(Error::Parameter(format!("jammer power must be >= 0, got {power}")));
    }
    if !(jor > 0.0) {
        return Err(Error::Parameter(format!("jor must be > 0, got {jor}")));
    }
    let synth_len = ((n - 1) as f64 * jor).round() as usize + 1;
    let mut samples = match kind {
        JammerKind::None => {
            return Err(Error::Parameter("cannot generate a `none` jammer".into()))
        }
        JammerKind::Awgn => {
            let mut rng = rng_stream(seed, 0x4a41_4d00);
            let normal = Normal::new(0.0, 0.5f64.sqrt()).expect("valid stddev");
            let synth: Vec<IQSample> = (0..synth_len)
                .map(|_| IQSample::new(normal.sample(&mut rng), normal.sample(&mut rng)))
                .collect();
            resample_nearest(&synth, n, jor)
        }
        JammerKind::Deceptive(scheme) => {
            let ofdm = OfdmParams::default();
            let n_syms = synth_len.div_ceil(ofdm.symbol_len());
            let mut rng = rng_stream(seed, 0x4a41_4d01);
            let bits = random_bits(&mut rng, n_syms * ofdm.bits_per_ofdm_symbol(*scheme));
            let rec = modulate(&bits, *scheme, &ofdm)?;
            resample_nearest(&rec.samples[..synth_len], n, jor)
        }
    };
    scale_to_power(&mut samples, power);
    IQRecording::new(samples, LINK_SAMPLE_RATE_SPS, Label::Jam, Source::Synthetic(kind.name()))
}

/// Realized power bookkeeping from `mix`, the exact-SNR path for the
/// evaluation metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixAccounting {
    pub signal_power: f64,
    pub jammer_power: f64,
    pub noise_power: f64,
}

impl MixAccounting {
    /// SNR seen by the receiver, treating jamming as extra noise floor.
    pub fn snr_linear(&self) -> f64 {
        self.signal_power / (self.noise_power + self.jammer_power)
    }
}

/// A mixed recording plus its power accounting.
#[derive(Debug, Clone)]
pub struct MixOutput {
    pub recording: IQRecording,
    pub accounting: MixAccounting,
}

/// out = signal + g_j * jammer + w.
///
/// `g_j` is set from measured powers so the realized jammer-to-signal
/// ratio is exactly `jsr_db`; `w` is AWGN at `snr_db` below the measured
/// signal power (`snr_db = f64::INFINITY` disables noise). A too-short
/// jammer is repeated, a too-long one truncated.
pub fn mix(
    signal: &IQRecording,
    jammer: Option<&IQRecording>,
    snr_db: f64,
    jsr_db: f64,
    seed: u64,
) -> Result<MixOutput> {
    let n = signal.len();
    let p_sig = signal.mean_power();
    if p_sig <= 0.0 {
        return Err(Error::Parameter("signal has zero power".into()));
    }

    let mut out: Vec<IQSample> = signal.samples.clone();

    let mut jammer_power = 0.0;
    if let Some(jam) = jammer {
        let p_jam_target = p_sig * db_to_linear(jsr_db);
        let mut tiled: Vec<IQSample> = jam.samples.iter().copied().cycle().take(n).collect();
        scale_to_power(&mut tiled, p_jam_target);
        for (o, j) in out.iter_mut().zip(&tiled) {
            o.i += j.i;
            o.q += j.q;
        }
        jammer_power = p_jam_target;
    }

    let noise_power = if snr_db.is_finite() {
        p_sig / db_to_linear(snr_db)
    } else {
        0.0
    };
    if noise_power > 0.0 {
        let mut rng = rng_stream(seed, 0x4e4f_4953);
        let normal = Normal::new(0.0, 0.5f64.sqrt()).expect("valid stddev");
        let mut noise: Vec<IQSample> = (0..n)
            .map(|_| IQSample::new(normal.sample(&mut rng), normal.sample(&mut rng)))
            .collect();
        scale_to_power(&mut noise, noise_power);
        for (o, w) in out.iter_mut().zip(&noise) {
            o.i += w.i;
            o.q += w.q;
        }
    }

    let label = if jammer.is_some() { Label::Jam } else { Label::NoJam };
    let recording = IQRecording::new(out, signal.sample_rate_sps, label, Source::Synthetic("mix".into()))?;
    Ok(MixOutput {
        recording,
        accounting: MixAccounting { signal_power: p_sig, jammer_power, noise_power },
    })
}
