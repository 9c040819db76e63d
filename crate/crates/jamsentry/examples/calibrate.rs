// Scratch calibration runs for picking preset operating points. Not part
// of the test suite.

use std::time::Instant;

use jamsentry::detectors::{ae_detect, ae_train, AeHyper};
use jamsentry::evalkit::{run_experiment, DetectorKind, EvalParams, ExperimentPreset};
use jamsentry::imaging::{histogram_image, AxisLimits, GrayImage};
use jamsentry::iq::{compute_normalization_samples, normalize_samples, IQChunk, Label};
use jamsentry::linksim::{gen_dataset, JammerKind, ModScheme, ScenarioConfig};

fn build_images(records: &[jamsentry::linksim::ChunkRecord], idx: &[usize], stats: &jamsentry::iq::NormalizationStats, side: usize) -> Vec<(GrayImage, Label)> {
    idx.iter()
        .map(|&i| {
            let c = &records[i].chunk;
            let normed = IQChunk { samples: normalize_samples(&c.samples, stats), label: c.label };
            (
                histogram_image(&normed, side, side, &AxisLimits::standard()).unwrap().without_counts(),
                c.label,
            )
        })
        .collect()
}

fn separation_run(n_per_image: usize, jsr_db: f64, snr_db: f64, scheme: ModScheme, train: usize, test_per_class: usize, epochs: usize, seed: u64) {
    let cfg = ScenarioConfig {
        scheme,
        snr_db,
        jsr_db,
        jammer: JammerKind::Awgn,
        seed,
        ..ScenarioConfig::default()
    };
    let t0 = Instant::now();
    let ds = gen_dataset(&cfg, n_per_image, train + test_per_class, Default::default()).unwrap();
    let gen_t = t0.elapsed().as_secs_f64();

    // first `train` nojam chunks train; the rest of nojam + first jam chunks test
    let nojam_idx: Vec<usize> = (0..ds.records.len()).filter(|&i| ds.records[i].chunk.label == Label::NoJam).collect();
    let jam_idx: Vec<usize> = (0..ds.records.len()).filter(|&i| ds.records[i].chunk.label == Label::Jam).collect();
    let train_idx = &nojam_idx[..train];
    let test_nojam = &nojam_idx[train..train + test_per_class];
    let test_jam = &jam_idx[..test_per_class];

    let stats = compute_normalization_samples(train_idx.iter().map(|&i| ds.records[i].chunk.samples.as_slice())).unwrap();
    let t1 = Instant::now();
    let train_imgs: Vec<GrayImage> = build_images(&ds.records, train_idx, &stats, 224).into_iter().map(|(im, _)| im).collect();
    let img_t = t1.elapsed().as_secs_f64();

    let hyper = AeHyper { epochs, seed, ..AeHyper::default() };
    let t2 = Instant::now();
    let res = ae_train(&train_imgs, &hyper).unwrap();
    let train_t = t2.elapsed().as_secs_f64();
    let thr = res.model.threshold.unwrap();

    let mut jam_mses = Vec::new();
    let mut nojam_mses = Vec::new();
    let mut correct = 0usize;
    for (&i, is_jam) in test_nojam.iter().map(|i| (i, false)).chain(test_jam.iter().map(|i| (i, true))) {
        let (img, label) = &build_images(&ds.records, &[i], &stats, 224)[0];
        let v = ae_detect(&res.model, img).unwrap();
        if v.label == *label {
            correct += 1;
        }
        if is_jam { jam_mses.push(v.score) } else { nojam_mses.push(v.score) }
    }
    let acc = correct as f64 / (2 * test_per_class) as f64;
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "AE {scheme:?} n={n_per_image} snr={snr_db} jsr={jsr_db} ep={epochs}: acc={acc:.3} tau={:.3e} train_mse={:.3e}+-{:.3e} nojam_test={:.3e} jam_test={:.3e} (first epochs loss {:.3e}->{:.3e}) [gen {gen_t:.1}s img {img_t:.1}s train {train_t:.1}s]",
        thr.tau, thr.mse_train_mean, thr.mse_train_std, mean(&nojam_mses), mean(&jam_mses),
        res.log[0].loss, res.log.last().unwrap().loss,
    );
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first().map(|s| s.as_str()) {
        Some("sep") => {
            // criterion-5 shape: BPSK snr15 jsr0, n=1e4, 150 train
            separation_run(10_000, 0.0, 15.0, ModScheme::Bpsk, 150, 50, 250, 42);
        }
        Some("quick") => {
            // fast convergence probe at reduced epochs/train size
            separation_run(10_000, 0.0, 15.0, ModScheme::Bpsk, 30, 30, 100, 42);
        }
        Some("weak") => {
            for jsr in [-12.0, -10.0, -8.0, -6.0, -4.0] {
                separation_run(100_000, jsr, 15.0, ModScheme::Bpsk, 30, 25, 250, 42);
            }
        }
        Some("sweepn") => {
            for n in [1_000usize, 5_000, 10_000] {
                separation_run(n, args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.0), 15.0, ModScheme::Bpsk, 40, 50, 250, 42);
            }
        }
        Some("schemes") => {
            for scheme in ModScheme::ALL {
                separation_run(10_000, -6.0, 30.0, scheme, 40, 25, 250, 42);
            }
        }
        Some("cnn") => {
            use jamsentry::detectors::{cnn_detect, cnn_train, CnnHyper};
            let cfg = ScenarioConfig {
                snr_db: 15.0,
                jsr_db: 0.0,
                jammer: JammerKind::Awgn,
                seed: 42,
                ..ScenarioConfig::default()
            };
            let t0 = Instant::now();
            let ds = gen_dataset(&cfg, 10_000, 125, Default::default()).unwrap();
            let nojam: Vec<usize> = (0..ds.records.len()).filter(|&i| ds.records[i].chunk.label == Label::NoJam).collect();
            let jam: Vec<usize> = (0..ds.records.len()).filter(|&i| ds.records[i].chunk.label == Label::Jam).collect();
            let train_idx: Vec<usize> = nojam[..75].iter().chain(jam[..75].iter()).copied().collect();
            let stats = compute_normalization_samples(train_idx.iter().map(|&i| ds.records[i].chunk.samples.as_slice())).unwrap();
            let train_imgs = build_images(&ds.records, &train_idx, &stats, 224);
            let t1 = Instant::now();
            let res = cnn_train(&train_imgs, &CnnHyper { seed: 42, ..CnnHyper::default() }).unwrap();
            let train_t = t1.elapsed().as_secs_f64();
            let test_idx: Vec<usize> = nojam[75..125].iter().chain(jam[75..125].iter()).copied().collect();
            let test_imgs = build_images(&ds.records, &test_idx, &stats, 224);
            let correct = test_imgs.iter().filter(|(im, l)| cnn_detect(&res.model, im).unwrap().label == *l).count();
            println!(
                "CNN 75+75: test acc {}/{} = {:.3}, loss {:.4}->{:.4}, train acc {:.3} [{:.0}s train, {:.0}s total]",
                correct, test_imgs.len(), correct as f64 / test_imgs.len() as f64,
                res.log[0].loss, res.log.last().unwrap().loss, res.log.last().unwrap().train_accuracy,
                train_t, t0.elapsed().as_secs_f64()
            );
        }
        Some("cnnlr") => {
            use jamsentry::detectors::{cnn_detect, cnn_train, CnnHyper};
            let cfg = ScenarioConfig {
                snr_db: 15.0,
                jsr_db: 0.0,
                jammer: JammerKind::Awgn,
                seed: 42,
                ..ScenarioConfig::default()
            };
            let ds = gen_dataset(&cfg, 10_000, 55, Default::default()).unwrap();
            let nojam: Vec<usize> = (0..ds.records.len()).filter(|&i| ds.records[i].chunk.label == Label::NoJam).collect();
            let jam: Vec<usize> = (0..ds.records.len()).filter(|&i| ds.records[i].chunk.label == Label::Jam).collect();
            let train_idx: Vec<usize> = nojam[..30].iter().chain(jam[..30].iter()).copied().collect();
            let stats = compute_normalization_samples(train_idx.iter().map(|&i| ds.records[i].chunk.samples.as_slice())).unwrap();
            let train_imgs = build_images(&ds.records, &train_idx, &stats, 224);
            let test_idx: Vec<usize> = nojam[30..55].iter().chain(jam[30..55].iter()).copied().collect();
            let test_imgs = build_images(&ds.records, &test_idx, &stats, 224);
            for lr in [0.003, 0.01, 0.03, 0.1, 0.3] {
                let t1 = Instant::now();
                let res = cnn_train(&train_imgs, &CnnHyper { learning_rate: lr, seed: 42, ..CnnHyper::default() }).unwrap();
                let correct = test_imgs.iter().filter(|(im, l)| cnn_detect(&res.model, im).unwrap().label == *l).count();
                println!(
                    "CNN lr={lr}: test acc {:.3}, loss {:.4}->{:.4}, final train acc {:.3} [{:.0}s]",
                    correct as f64 / test_imgs.len() as f64,
                    res.log[0].loss, res.log.last().unwrap().loss, res.log.last().unwrap().train_accuracy,
                    t1.elapsed().as_secs_f64()
                );
            }
        }
        Some("schemes0") => {
            for scheme in ModScheme::ALL {
                separation_run(10_000, 0.0, 30.0, scheme, 40, 25, 250, 42);
            }
        }
        Some("deceptive") => {
            let cfg = ScenarioConfig {
                snr_db: 15.0,
                jsr_db: 0.0,
                jammer: JammerKind::Deceptive(ModScheme::Bpsk),
                seed: 42,
                ..ScenarioConfig::default()
            };
            let ds = gen_dataset(&cfg, 10_000, 70, Default::default()).unwrap();
            let nojam: Vec<usize> = (0..ds.records.len()).filter(|&i| ds.records[i].chunk.label == Label::NoJam).collect();
            let jam: Vec<usize> = (0..ds.records.len()).filter(|&i| ds.records[i].chunk.label == Label::Jam).collect();
            let stats = compute_normalization_samples(nojam[..40].iter().map(|&i| ds.records[i].chunk.samples.as_slice())).unwrap();
            let train: Vec<GrayImage> = build_images(&ds.records, &nojam[..40], &stats, 224).into_iter().map(|(im, _)| im).collect();
            let res = ae_train(&train, &AeHyper { seed: 42, ..AeHyper::default() }).unwrap();
            let test: Vec<usize> = nojam[40..70].iter().chain(jam[..30].iter()).copied().collect();
            let imgs = build_images(&ds.records, &test, &stats, 224);
            let correct = imgs.iter().filter(|(im, l)| ae_detect(&res.model, im).unwrap().label == *l).count();
            println!("AE deceptive jsr0: acc {}/{} = {:.3}", correct, imgs.len(), correct as f64 / imgs.len() as f64);
        }
        Some("exp") => {
            // full run_experiment smoke at scaled settings
            let preset = ExperimentPreset {
                name: "calib".into(),
                scenario: ScenarioConfig { snr_db: 15.0, jsr_db: 0.0, jammer: JammerKind::Awgn, seed: 9, ..ScenarioConfig::default() },
                detector: DetectorKind::Ae,
                eval: EvalParams {
                    n_per_image: 10_000,
                    images_per_class: 80,
                    train_size: 40,
                    ..EvalParams::default()
                },
            };
            let t = Instant::now();
            let report = run_experiment(&preset).unwrap();
            println!("exp: folds {:?} mean {:.3} ci ({:.3},{:.3}) snr_dr {:?} [{:.1}s]",
                report.per_fold_accuracy, report.mean_accuracy, report.ci95.0, report.ci95.1, report.snr_dr, t.elapsed().as_secs_f64());
        }
        _ => {
            eprintln!("usage: calibrate [sep|quick|weak|sweepn <jsr>|schemes|exp]");
        }
    }
}
