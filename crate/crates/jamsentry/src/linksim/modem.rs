//! OFDM baseband modulator/demodulator.
//!
//! Subcarrier symbols use per-axis binary-reflected Gray coding and are
//! normalized to unit average symbol energy. Data occupies subcarriers
//! symmetric around DC (DC itself stays empty); each OFDM symbol is an
//! inverse DFT over `n_subcarriers` bins with a cyclic prefix prepended.
//! Time samples are scaled by 1/sqrt(n_data_subcarriers) so the average
//! transmit power is 1. The receiver assumes perfect frame alignment and
//! makes hard nearest-constellation decisions per data subcarrier.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iq::{IQRecording, IQSample, Label, Source};
use crate::linksim::LINK_SAMPLE_RATE_SPS;

/// Subcarrier modulation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModScheme {
    Bpsk,
    Qpsk,
    Qam16,
    Qam64,
}

impl ModScheme {
    pub const ALL: [ModScheme; 4] = [
        ModScheme::Bpsk,
        ModScheme::Qpsk,
        ModScheme::Qam16,
        ModScheme::Qam64,
    ];

    pub fn bits_per_symbol(&self) -> usize {
        match self {
            ModScheme::Bpsk => 1,
            ModScheme::Qpsk => 2,
            ModScheme::Qam16 => 4,
            ModScheme::Qam64 => 6,
        }
    }

    /// Bits carried on the I axis (Q carries the rest).
    fn i_axis_bits(&self) -> usize {
        match self {
            ModScheme::Bpsk => 1,
            ModScheme::Qpsk => 1,
            ModScheme::Qam16 => 2,
            ModScheme::Qam64 => 3,
        }
    }

    /// Amplitude scale giving unit average symbol energy.
    fn scale(&self) -> f64 {
        match self {
            ModScheme::Bpsk => 1.0,
            ModScheme::Qpsk => 0.5f64.sqrt(),
            ModScheme::Qam16 => 0.1f64.sqrt(),
            ModScheme::Qam64 => (1.0f64 / 42.0).sqrt(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModScheme::Bpsk => "bpsk",
            ModScheme::Qpsk => "qpsk",
            ModScheme::Qam16 => "qam16",
            ModScheme::Qam64 => "qam64",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bpsk" => Ok(ModScheme::Bpsk),
            "qpsk" => Ok(ModScheme::Qpsk),
            "qam16" | "16qam" => Ok(ModScheme::Qam16),
            "qam64" | "64qam" => Ok(ModScheme::Qam64),
            other => Err(Error::Parameter(format!("unknown modulation scheme {other:?}"))),
        }
    }

    /// Map `bits_per_symbol` bits (MSB first, I axis then Q axis) to a
    /// constellation point.
    pub fn map_symbol(&self, bits: &[u8]) -> Complex<f64> {
        debug_assert_eq!(bits.len(), self.bits_per_symbol());
        let ib = self.i_axis_bits();
        let i = axis_amplitude(&bits[..ib]);
        let q = if self == &ModScheme::Bpsk {
            0.0
        } else {
            axis_amplitude(&bits[ib..])
        };
        Complex::new(i, q) * self.scale()
    }

    /// Hard nearest-constellation decision, returning the symbol's bits.
    pub fn demap_symbol(&self, point: Complex<f64>, bits_out: &mut Vec<u8>) {
        let s = self.scale();
        axis_bits(point.re / s, self.i_axis_bits(), bits_out);
        if self != &ModScheme::Bpsk {
            axis_bits(point.im / s, self.bits_per_symbol() - self.i_axis_bits(), bits_out);
        }
    }

    /// The full constellation in bit-pattern order.
    pub fn constellation(&self) -> Vec<Complex<f64>> {
        let bps = self.bits_per_symbol();
        (0..1usize << bps)
            .map(|v| {
                let bits: Vec<u8> = (0..bps).rev().map(|k| ((v >> k) & 1) as u8).collect();
                self.map_symbol(&bits)
            })
            .collect()
    }
}

/// Unscaled amplitude of one axis from its Gray-coded bits (MSB first):
/// level index k in 0..2^n maps to amplitude 2k - (2^n - 1), and carries
/// the bit pattern gray(k) = k ^ (k >> 1).
fn axis_amplitude(bits: &[u8]) -> f64 {
    let mut v = 0usize;
    for &b in bits {
        v = (v << 1) | b as usize;
    }
    // inverse Gray: recover the level index from the bit pattern
    let mut k = v;
    k ^= k >> 1;
    k ^= k >> 2;
    k ^= k >> 4;
    let levels = 1usize << bits.len();
    (2 * k) as f64 - (levels - 1) as f64
}

fn axis_bits(amplitude: f64, n_bits: usize, out: &mut Vec<u8>) {
    let levels = 1i64 << n_bits;
    let k = (((amplitude + (levels - 1) as f64) / 2.0).round() as i64).clamp(0, levels - 1) as usize;
    let gray = k ^ (k >> 1);
    for b in (0..n_bits).rev() {
        out.push(((gray >> b) & 1) as u8);
    }
}

/// OFDM frame geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OfdmParams {
    pub n_subcarriers: usize,
    pub n_data_subcarriers: usize,
    pub cp_len: usize,
}

impl Default for OfdmParams {
    fn default() -> Self {
        Self { n_subcarriers: 64, n_data_subcarriers: 48, cp_len: 16 }
    }
}

impl OfdmParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 {
            return Err(Error::Parameter("n_subcarriers must be > 0".into()));
        }
        if self.cp_len >= self.n_subcarriers {
            return Err(Error::Parameter(format!(
                "cp_len {} must be < n_subcarriers {}",
                self.cp_len, self.n_subcarriers
            )));
        }
        if self.n_data_subcarriers == 0 || self.n_data_subcarriers > self.n_subcarriers - 1 {
            return Err(Error::Parameter(format!(
                "n_data_subcarriers {} must be in 1..={} (DC stays empty)",
                self.n_data_subcarriers,
                self.n_subcarriers - 1
            )));
        }
        Ok(())
    }

    /// Samples per OFDM symbol including the cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        self.n_subcarriers + self.cp_len
    }

    /// FFT bins carrying data, ascending; symmetric around DC with the
    /// extra bin (odd counts) on the positive side.
    pub fn data_bins(&self) -> Vec<usize> {
        let n_pos = (self.n_data_subcarriers + 1) / 2;
        let n_neg = self.n_data_subcarriers / 2;
        let mut bins: Vec<usize> = (1..=n_pos).collect();
        bins.extend(self.n_subcarriers - n_neg..self.n_subcarriers);
        bins
    }

    pub fn bits_per_ofdm_symbol(&self, scheme: ModScheme) -> usize {
        self.n_data_subcarriers * scheme.bits_per_symbol()
    }
}

fn inverse_fft(ofdm: &OfdmParams) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(ofdm.n_subcarriers)
}

fn forward_fft(ofdm: &OfdmParams) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(ofdm.n_subcarriers)
}

/// Modulate a bit stream (values 0/1) onto OFDM symbols. Bits that do not
/// fill the last OFDM symbol are zero-padded. Average output power is 1.
pub fn modulate(bits: &[u8], scheme: ModScheme, ofdm: &OfdmParams) -> Result<IQRecording> {
    ofdm.validate()?;
    if bits.is_empty() {
        return Err(Error::EmptyInput("no bits to modulate".into()));
    }
    if let Some(&bad) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::Parameter(format!("bit values must be 0 or 1, got {bad}")));
    }
    let per_symbol = ofdm.bits_per_ofdm_symbol(scheme);
    let n_symbols = bits.len().div_ceil(per_symbol);
    let mut padded = bits.to_vec();
    padded.resize(n_symbols * per_symbol, 0);

    let bins = ofdm.data_bins();
    let bps = scheme.bits_per_symbol();
    let ifft = inverse_fft(ofdm);
    let scale = 1.0 / (ofdm.n_data_subcarriers as f64).sqrt();
    let mut out = Vec::with_capacity(n_symbols * ofdm.symbol_len());
    let mut spectrum = vec![Complex::new(0.0, 0.0); ofdm.n_subcarriers];
    for sym in 0..n_symbols {
        spectrum.fill(Complex::new(0.0, 0.0));
        let base = sym * per_symbol;
        for (slot, &bin) in bins.iter().enumerate() {
            let chunk = &padded[base + slot * bps..base + (slot + 1) * bps];
            spectrum[bin] = scheme.map_symbol(chunk);
        }
        ifft.process(&mut spectrum);
        let body = spectrum.iter().map(|c| IQSample::new(c.re * scale, c.im * scale));
        // cyclic prefix: the tail of the symbol body comes first
        let tail = spectrum[ofdm.n_subcarriers - ofdm.cp_len..]
            .iter()
            .map(|c| IQSample::new(c.re * scale, c.im * scale));
        out.extend(tail);
        out.extend(body);
    }
    IQRecording::new(out, LINK_SAMPLE_RATE_SPS, Label::NoJam, Source::Synthetic("modulate".into()))
}

/// Recover bits with hard decisions. The recording must be frame-aligned
/// and an exact multiple of the OFDM symbol length.
pub fn demodulate(rec: &IQRecording, scheme: ModScheme, ofdm: &OfdmParams) -> Result<Vec<u8>> {
    ofdm.validate()?;
    let sym_len = ofdm.symbol_len();
    if rec.samples.is_empty() || rec.samples.len() % sym_len != 0 {
        return Err(Error::Format(format!(
            "framing: recording length {} is not a multiple of the OFDM symbol length {}",
            rec.samples.len(),
            sym_len
        )));
    }
    let n_symbols = rec.samples.len() / sym_len;
    let bins = ofdm.data_bins();
    let fft = forward_fft(ofdm);
    // undo the transmit scaling and the unnormalized forward transform
    let scale = (ofdm.n_data_subcarriers as f64).sqrt() / ofdm.n_subcarriers as f64;
    let mut bits = Vec::with_capacity(n_symbols * ofdm.bits_per_ofdm_symbol(scheme));
    let mut spectrum = vec![Complex::new(0.0, 0.0); ofdm.n_subcarriers];
    for sym in 0..n_symbols {
        let body = &rec.samples[sym * sym_len + ofdm.cp_len..(sym + 1) * sym_len];
        for (dst, s) in spectrum.iter_mut().zip(body) {
            *dst = Complex::new(s.i, s.q);
        }
        fft.process(&mut spectrum);
        for &bin in &bins {
            scheme.demap_symbol(spectrum[bin] * scale, &mut bits);
        }
    }
    Ok(bits)
}

/// Fraction of subcarrier symbols whose recovered bits differ from the
/// transmitted ones. Both slices must align and be multiples of
/// `bits_per_symbol`.
pub fn symbol_error_rate(tx: &[u8], rx: &[u8], scheme: ModScheme) -> f64 {
    let bps = scheme.bits_per_symbol();
    let n = tx.len().min(rx.len()) / bps;
    if n == 0 {
        return 0.0;
    }
    let errors = (0..n)
        .filter(|&s| tx[s * bps..(s + 1) * bps] != rx[s * bps..(s + 1) * bps])
        .count();
    errors as f64 / n as f64
}
