//! Cross-module integration checks: Monte-Carlo link statistics against
//! analytic oracles and image-level properties of the jammer kinds.

mod common;

use jamsentry::evalkit::{moment_snr, run_experiment, NormalizationMode};
use jamsentry::imaging::GrayImage;
use jamsentry::iq::Label;
use jamsentry::linksim::{
    demodulate, gen_dataset, gen_jammer, mix, modulate, symbol_error_rate, JammerKind, ModScheme,
    OfdmParams, ScenarioConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{bpsk_ser_oracle, class_indices, images_for};

fn measured_bpsk_ser(snr_db: f64, n_symbols: usize, seed: u64) -> f64 {
    let ofdm = OfdmParams::default();
    let n_ofdm = n_symbols.div_ceil(ofdm.n_data_subcarriers);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<u8> = (0..n_ofdm * ofdm.bits_per_ofdm_symbol(ModScheme::Bpsk))
        .map(|_| rng.gen_range(0..=1u8))
        .collect();
    let clean = modulate(&bits, ModScheme::Bpsk, &ofdm).unwrap();
    let noisy = mix(&clean, None, snr_db, 0.0, seed + 1).unwrap();
    let rx = demodulate(&noisy.recording, ModScheme::Bpsk, &ofdm).unwrap();
    symbol_error_rate(&bits, &rx, ModScheme::Bpsk)
}

#[test]
fn ser_is_monotone_non_increasing_in_snr() {
    let sers: Vec<f64> = [0.0, 5.0, 10.0, 15.0, 20.0]
        .into_iter()
        .map(|snr| measured_bpsk_ser(snr, 100_000, 77))
        .collect();
    for pair in sers.windows(2) {
        assert!(pair[1] <= pair[0], "SER must not increase with SNR: {sers:?}");
    }
    // endpoint sanity against the analytic value at 0 dB
    let oracle = bpsk_ser_oracle(0.0, 64, 48);
    assert!((sers[0] - oracle).abs() < 5.0 * (oracle / 1e5f64).sqrt() + 1e-3);
}

#[test]
fn high_snr_ser_is_negligible() {
    // 30 dB: analytically zero to double precision over 1e5 symbols
    let ser = measured_bpsk_ser(30.0, 100_000, 78);
    assert!(ser < 1e-4, "SER at 30 dB should vanish, got {ser}");
}

fn l1(a: &GrayImage, b: &GrayImage) -> f64 {
    a.pixels().iter().zip(b.pixels()).map(|(x, y)| (x - y).abs()).sum()
}

#[test]
fn deceptive_and_awgn_jammers_produce_distinct_images() {
    // at high JSR the received mixture is dominated by the jammer, so the
    // two jammer kinds should look very different through the pipeline
    let base = ScenarioConfig {
        snr_db: 25.0,
        jsr_db: 15.0,
        seed: 5,
        ..ScenarioConfig::default()
    };
    let image_of = |jammer: JammerKind, seed: u64| {
        let cfg = ScenarioConfig { jammer, seed, ..base.clone() };
        let ds = gen_dataset(&cfg, 20_000, 2, Default::default()).unwrap();
        let (nojam, jam) = class_indices(&ds.records);
        let (_, imgs) = images_for(&ds.records, &nojam, &jam, 64);
        imgs.into_iter().next().unwrap().0
    };
    let awgn_a = image_of(JammerKind::Awgn, 5);
    let awgn_b = image_of(JammerKind::Awgn, 6);
    let dec_a = image_of(JammerKind::Deceptive(ModScheme::Bpsk), 5);
    let dec_b = image_of(JammerKind::Deceptive(ModScheme::Bpsk), 6);

    let same_kind = l1(&awgn_a, &awgn_b).max(l1(&dec_a, &dec_b));
    let cross_kind = l1(&awgn_a, &dec_a).min(l1(&awgn_b, &dec_b));
    assert!(
        cross_kind > 2.0 * same_kind,
        "cross-kind L1 {cross_kind} should dominate same-kind realization noise {same_kind}"
    );
}

#[test]
fn deceptive_jammer_carries_constellation_structure() {
    // with JOR 1 a deceptive jammer is an OFDM signal: heavier tails
    // than Gaussian noise of the same power show up in the histogram
    let awgn = gen_jammer(&JammerKind::Awgn, 1.0, 100_000, 1.0, 3).unwrap();
    let dec = gen_jammer(&JammerKind::Deceptive(ModScheme::Qam16), 1.0, 100_000, 1.0, 3).unwrap();
    assert!((awgn.mean_power() - dec.mean_power()).abs() < 1e-9);
    let kurt = |samples: &[jamsentry::iq::IQSample]| {
        let m2 = samples.iter().map(|s| s.power()).sum::<f64>() / samples.len() as f64;
        let m4 = samples.iter().map(|s| s.power() * s.power()).sum::<f64>() / samples.len() as f64;
        m4 / (m2 * m2)
    };
    // complex Gaussian has E|x|^4 / (E|x|^2)^2 = 2
    assert!((kurt(&awgn.samples) - 2.0).abs() < 0.05);
    assert!(kurt(&dec.samples) < 2.0 * 0.999 || kurt(&dec.samples) > 2.0 * 1.001);
}

#[test]
fn moment_estimator_tracks_known_snr_direction() {
    // the blind estimator is biased for OFDM but must order SNRs correctly
    let ofdm = OfdmParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let bits: Vec<u8> = (0..ofdm.bits_per_ofdm_symbol(ModScheme::Bpsk) * 600)
        .map(|_| rng.gen_range(0..=1u8))
        .collect();
    let clean = modulate(&bits, ModScheme::Bpsk, &ofdm).unwrap();
    let low = mix(&clean, None, 0.0, 0.0, 1).unwrap().recording;
    let high = mix(&clean, None, 15.0, 0.0, 2).unwrap().recording;
    assert!(moment_snr(&high) > moment_snr(&low));
}

#[test]
fn per_split_normalization_is_deterministic_and_runs() {
    use jamsentry::evalkit::{DetectorKind, EvalParams, ExperimentPreset};
    let preset = ExperimentPreset {
        name: "persplit".into(),
        scenario: ScenarioConfig {
            snr_db: 15.0,
            jsr_db: 5.0,
            jammer: JammerKind::Awgn,
            seed: 21,
            ..ScenarioConfig::default()
        },
        detector: DetectorKind::Ae,
        eval: EvalParams {
            n_per_image: 2_000,
            images_per_class: 20,
            train_size: 8,
            kfolds: 4,
            image_side: 28,
            normalization: NormalizationMode::PerSplit,
            ae: jamsentry::detectors::AeHyper { hidden: 8, epochs: 40, ..Default::default() },
            ..EvalParams::default()
        },
    };
    let a = run_experiment(&preset).unwrap();
    let b = run_experiment(&preset).unwrap();
    assert_eq!(a.per_fold_accuracy, b.per_fold_accuracy);
}

#[test]
fn low_ber_filter_keeps_weak_scenarios_balanced() {
    use jamsentry::evalkit::low_ber_filter;
    let cfg = ScenarioConfig {
        snr_db: 15.0,
        jsr_db: -12.0,
        jammer: JammerKind::Awgn,
        seed: 31,
        ..ScenarioConfig::default()
    };
    let ds = gen_dataset(&cfg, 5_000, 10, Default::default()).unwrap();
    let kept = low_ber_filter(ds.records);
    let jam = kept.iter().filter(|r| r.chunk.label == Label::Jam).count();
    assert_eq!(kept.len(), 20, "weak jamming keeps every chunk below the SER gate");
    assert_eq!(jam, 10);
}
