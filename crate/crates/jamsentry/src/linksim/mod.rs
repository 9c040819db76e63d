//! Synthetic OFDM link and jammer generator: the desk-scale stand-in for a
//! real measurement campaign. Legitimate traffic is OFDM with Gray-coded
//! BPSK/QPSK/16-QAM/64-QAM subcarriers; jamming is AWGN or deceptive
//! (same modulator as the link); mixtures are controlled by SNR and JSR.
//! Everything is a pure function of (config, seed).

pub mod jammer;
pub mod modem;
pub mod scenario;

pub use jammer::{gen_jammer, mix, JammerKind, MixAccounting, MixOutput};
pub use modem::{demodulate, modulate, symbol_error_rate, ModScheme, OfdmParams};
pub use scenario::{check_weak_regime, gen_dataset, ChunkRecord, Dataset, ScenarioConfig, WeakRegimeCheck};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Link capture rate, samples per second.
pub const LINK_SAMPLE_RATE_SPS: u64 = 5_000_000;

/// Independent deterministic generator for one sub-purpose of a seed.
pub(crate) fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform random bits (values 0/1).
pub(crate) fn random_bits(rng: &mut ChaCha8Rng, count: usize) -> Vec<u8> {
    use rand::RngCore;
    (0..count).map(|_| (rng.next_u32() & 1) as u8).collect()
}

pub(crate) fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Derive an independent 64-bit seed for a sub-purpose (splitmix64 step).
pub(crate) fn splitmix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
