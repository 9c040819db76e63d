//! End-to-end experiment runner: generate a scenario dataset, build
//! histogram images per fold with leakage-safe normalization, train the
//! chosen detector, and report stratified K-fold accuracy with Student-t
//! confidence intervals, the SNR degradation ratio, and overhead figures.
//!
//! Everything that lands in the CSV report is a pure function of
//! (preset, seed); wall-clock timings are reported only in the JSON
//! summary since they depend on the machine.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::detectors::{
    ae_detect, ae_model_bytes, ae_train, cnn_detect, cnn_model_bytes, cnn_train,
    AeHyper, AeModel, CnnHyper, CnnModel,
};
use crate::error::{Error, Result};
use crate::evalkit::kfold::kfold_split;
use crate::evalkit::snr::low_ber_filter;
use crate::evalkit::stats::{ci95, mean_and_sample_std};
use crate::evalkit::{accuracy, ConfusionCounts};
use crate::imaging::{augment, histogram_image, legacy_limits, AxisLimits, GrayImage};
use crate::imaging::AugmentStrategy;
use crate::iq::{compute_normalization_samples, normalize_samples, IQChunk, Label, NormalizationStats};
use crate::linksim::scenario::ChunkRecord;
use crate::linksim::{gen_dataset, splitmix, ScenarioConfig};
use crate::linksim::scenario::GenOptions;

/// Which detection head an experiment evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectorKind {
    Ae,
    Cnn,
}

impl DetectorKind {
    pub fn name(&self) -> &'static str {
        match self {
            DetectorKind::Ae => "ae",
            DetectorKind::Cnn => "cnn",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ae" => Ok(DetectorKind::Ae),
            "cnn" => Ok(DetectorKind::Cnn),
            other => Err(Error::Parameter(format!("unknown detector {other:?}"))),
        }
    }
}

/// Constellation window choice for imaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitsChoice {
    /// Whole-constellation [-2, 2] x [-2, 2] window.
    Standard,
    /// Prior-art single-cloud windows per modulation scheme.
    Legacy,
}

/// Whether test images reuse the training-split normalization statistics
/// (leakage-safe default) or recompute them on the test split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormalizationMode {
    TrainStats,
    PerSplit,
}

/// Evaluation knobs around one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    /// IQ samples per image (n).
    pub n_per_image: usize,
    /// Evaluation pool size per class.
    pub images_per_class: usize,
    /// Training budget: no-jam images for the autoencoder, total images
    /// (half per class) for the CNN.
    pub train_size: usize,
    pub kfolds: usize,
    /// Image side P = Q.
    pub image_side: usize,
    pub limits: LimitsChoice,
    pub normalization: NormalizationMode,
    pub require_weak: bool,
    pub low_ber_filter: bool,
    /// Extra augmented copies of the training images.
    pub augment: Option<AugmentStrategy>,
    /// Folds run in parallel when > 1; results are identical either way.
    pub threads: usize,
    pub ae: AeHyper,
    pub cnn: CnnHyper,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            n_per_image: 100_000,
            images_per_class: 200,
            train_size: 150,
            kfolds: 5,
            image_side: 224,
            limits: LimitsChoice::Standard,
            normalization: NormalizationMode::TrainStats,
            require_weak: false,
            low_ber_filter: false,
            augment: None,
            threads: 1,
            ae: AeHyper::default(),
            cnn: CnnHyper::default(),
        }
    }
}

/// A fully specified experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPreset {
    pub name: String,
    pub scenario: ScenarioConfig,
    pub detector: DetectorKind,
    pub eval: EvalParams,
}

impl Default for ExperimentPreset {
    fn default() -> Self {
        Self {
            name: "default".into(),
            scenario: ScenarioConfig::default(),
            detector: DetectorKind::Ae,
            eval: EvalParams::default(),
        }
    }
}

/// Wall-clock overhead figures (medians of 20 repetitions).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub image_gen_ms: f64,
    pub infer_ms_per_image: f64,
}

/// Cross-validated evaluation outcome for one experiment setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    pub ci95: (f64, f64),
    pub snr_dr: Option<f64>,
    pub timings: Timings,
    pub model_bytes: u64,
}

/// One setting of a sweep plus its report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub setting: String,
    pub report: EvalReport,
}

/// A named sweep over one control variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub name: String,
    pub control: String,
    pub rows: Vec<SweepRow>,
}

/// Either trained head, for timing/serialization purposes.
pub enum TrainedDetector {
    Ae(Box<AeModel>),
    Cnn(Box<CnnModel>),
}

impl TrainedDetector {
    pub fn model_bytes(&self) -> u64 {
        match self {
            TrainedDetector::Ae(m) => ae_model_bytes(m),
            TrainedDetector::Cnn(m) => cnn_model_bytes(m),
        }
    }

    pub fn detect(&self, img: &GrayImage) -> Result<Label> {
        Ok(match self {
            TrainedDetector::Ae(m) => ae_detect(m, img)?.label,
            TrainedDetector::Cnn(m) => cnn_detect(m, img)?.label,
        })
    }
}

fn axis_limits(preset: &ExperimentPreset) -> AxisLimits {
    match preset.eval.limits {
        LimitsChoice::Standard => AxisLimits::standard(),
        LimitsChoice::Legacy => legacy_limits(preset.scenario.scheme),
    }
}

fn build_image(
    chunk: &IQChunk,
    stats: &NormalizationStats,
    side: usize,
    limits: &AxisLimits,
) -> Result<GrayImage> {
    let normed = IQChunk {
        samples: normalize_samples(&chunk.samples, stats),
        label: chunk.label,
    };
    Ok(histogram_image(&normed, side, side, limits)?.without_counts())
}

/// Train on the fold's training partition and return the per-fold test
/// accuracy alongside the trained detector.
fn run_fold(
    preset: &ExperimentPreset,
    records: &[ChunkRecord],
    train_idx: &[usize],
    test_idx: &[usize],
    fold: usize,
) -> Result<(f64, TrainedDetector)> {
    let params = &preset.eval;
    let limits = axis_limits(preset);
    let fold_seed = splitmix(preset.scenario.seed, 0xf07d_0000 + fold as u64);

    // pick the training chunks
    let train_chunks: Vec<usize> = match preset.detector {
        DetectorKind::Ae => {
            let picked: Vec<usize> = train_idx
                .iter()
                .copied()
                .filter(|&i| records[i].chunk.label == Label::NoJam)
                .take(params.train_size)
                .collect();
            if picked.len() < params.train_size {
                return Err(Error::Data(format!(
                    "fold {fold}: train partition supplies {} no-jam chunks, need {}",
                    picked.len(),
                    params.train_size
                )));
            }
            picked
        }
        DetectorKind::Cnn => {
            let want_nojam = params.train_size.div_ceil(2);
            let want_jam = params.train_size / 2;
            let mut nojam = Vec::with_capacity(want_nojam);
            let mut jam = Vec::with_capacity(want_jam);
            for &i in train_idx {
                match records[i].chunk.label {
                    Label::NoJam if nojam.len() < want_nojam => nojam.push(i),
                    Label::Jam if jam.len() < want_jam => jam.push(i),
                    _ => {}
                }
            }
            if nojam.len() < want_nojam || jam.len() < want_jam {
                return Err(Error::Data(format!(
                    "fold {fold}: train partition supplies {}/{} chunks, need {}/{}",
                    nojam.len(),
                    jam.len(),
                    want_nojam,
                    want_jam
                )));
            }
            nojam.into_iter().chain(jam).collect()
        }
    };

    // leakage-safe normalization: statistics of the chunks actually trained on
    let train_stats =
        compute_normalization_samples(train_chunks.iter().map(|&i| records[i].chunk.samples.as_slice()))?;

    let mut train_images: Vec<(GrayImage, Label)> = train_chunks
        .iter()
        .map(|&i| {
            build_image(&records[i].chunk, &train_stats, params.image_side, &limits)
                .map(|im| (im, records[i].chunk.label))
        })
        .collect::<Result<_>>()?;
    if let Some(strategy) = params.augment {
        let extra: Vec<(GrayImage, Label)> = train_images
            .iter()
            .map(|(im, l)| augment(im, strategy).map(|a| (a, *l)))
            .collect::<Result<_>>()?;
        train_images.extend(extra);
    }

    let detector = match preset.detector {
        DetectorKind::Ae => {
            let hyper = AeHyper { seed: fold_seed, ..params.ae.clone() };
            let nojam_only: Vec<GrayImage> = train_images.into_iter().map(|(im, _)| im).collect();
            TrainedDetector::Ae(Box::new(ae_train(&nojam_only, &hyper)?.model))
        }
        DetectorKind::Cnn => {
            let hyper = CnnHyper { seed: fold_seed, ..params.cnn.clone() };
            TrainedDetector::Cnn(Box::new(cnn_train(&train_images, &hyper)?.model))
        }
    };

    let test_stats = match params.normalization {
        NormalizationMode::TrainStats => train_stats,
        NormalizationMode::PerSplit => compute_normalization_samples(
            test_idx.iter().map(|&i| records[i].chunk.samples.as_slice()),
        )?,
    };
    let mut counts = ConfusionCounts::default();
    for &i in test_idx {
        let img = build_image(&records[i].chunk, &test_stats, params.image_side, &limits)?;
        counts.tally(records[i].chunk.label, detector.detect(&img)?);
    }
    Ok((accuracy(&counts)?, detector))
}

fn median_ms(reps: usize, mut f: impl FnMut()) -> f64 {
    let mut times: Vec<f64> = (0..reps)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times[times.len() / 2]
}

/// Generate, image, train, and cross-validate one experiment setting.
pub fn run_experiment(preset: &ExperimentPreset) -> Result<EvalReport> {
    let params = &preset.eval;
    if params.images_per_class < params.kfolds {
        return Err(Error::Parameter(format!(
            "images_per_class {} must be at least kfolds {}",
            params.images_per_class, params.kfolds
        )));
    }
    let mut scenario = preset.scenario.clone();
    scenario.duration_samples = params.n_per_image * params.images_per_class;

    let dataset = gen_dataset(
        &scenario,
        params.n_per_image,
        params.images_per_class,
        GenOptions { require_weak: params.require_weak },
    )?;
    let records = if params.low_ber_filter {
        low_ber_filter(dataset.records)
    } else {
        dataset.records
    };
    let labels: Vec<Label> = records.iter().map(|r| r.chunk.label).collect();
    let folds = kfold_split(&labels, params.kfolds, scenario.seed)?;

    let mut per_fold = vec![0.0; folds.len()];
    let mut last_detector: Option<TrainedDetector> = None;
    if params.threads > 1 {
        let results = std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for worker in 0..params.threads.min(folds.len()) {
                let folds = &folds;
                let records = &records;
                handles.push(scope.spawn(move || {
                    let mut out = Vec::new();
                    let mut fold = worker;
                    while fold < folds.len() {
                        let (train, test) = &folds[fold];
                        out.push((fold, run_fold(preset, records, train, test, fold)));
                        fold += params.threads;
                    }
                    out
                }));
            }
            let mut all: Vec<(usize, Result<(f64, TrainedDetector)>)> = Vec::new();
            for h in handles {
                all.extend(h.join().expect("fold worker panicked"));
            }
            all.sort_by_key(|(fold, _)| *fold);
            all
        });
        for (fold, res) in results {
            let (acc, det) = res?;
            per_fold[fold] = acc;
            last_detector = Some(det);
        }
    } else {
        for (fold, (train, test)) in folds.iter().enumerate() {
            let (acc, det) = run_fold(preset, &records, train, test, fold)?;
            per_fold[fold] = acc;
            last_detector = Some(det);
        }
    }
    let detector = last_detector.expect("at least one fold");

    let (mean_accuracy, _) = mean_and_sample_std(&per_fold)?;
    let interval = ci95(&per_fold)?;
    let snr_dr = dataset
        .accounting_jam
        .map(|jam| jam.snr_linear() / dataset.accounting_nojam.snr_linear());

    // overhead probes on the first test chunk of the last fold
    let limits = axis_limits(preset);
    let probe_chunk = &records[folds[folds.len() - 1].1[0]].chunk;
    let probe_stats = compute_normalization_samples([probe_chunk.samples.as_slice()])?;
    let image_gen_ms = median_ms(20, || {
        let _ = build_image(probe_chunk, &probe_stats, params.image_side, &limits).unwrap();
    });
    let probe_img = build_image(probe_chunk, &probe_stats, params.image_side, &limits)?;
    let infer_ms_per_image = median_ms(20, || {
        let _ = detector.detect(&probe_img).unwrap();
    });

    Ok(EvalReport {
        per_fold_accuracy: per_fold,
        mean_accuracy,
        ci95: interval,
        snr_dr,
        timings: Timings { image_gen_ms, infer_ms_per_image },
        model_bytes: detector.model_bytes(),
    })
}

/// Train one detector on the full training budget without cross-validation
/// (the CLI `train-ae`/`train-cnn` path uses this through the library) and
/// also the bench command's model source.
pub fn train_full(preset: &ExperimentPreset) -> Result<TrainedDetector> {
    let params = &preset.eval;
    let mut scenario = preset.scenario.clone();
    scenario.duration_samples = params.n_per_image * params.images_per_class;
    let dataset = gen_dataset(
        &scenario,
        params.n_per_image,
        params.images_per_class,
        GenOptions { require_weak: params.require_weak },
    )?;
    let n = dataset.records.len();
    let all: Vec<usize> = (0..n).collect();
    let (_, det) = run_fold(preset, &dataset.records, &all, &all[..1.min(n)], 0)?;
    Ok(det)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Canonical CSV: one row per fold per setting plus a summary row.
/// Deliberately excludes wall-clock timings so reruns with the same seed
/// are byte-identical.
pub fn sweep_to_csv(sweep: &SweepReport) -> String {
    let mut out = String::from("setting,fold,accuracy,mean_accuracy,ci95_lo,ci95_hi,snr_dr,model_bytes\n");
    for row in &sweep.rows {
        for (k, acc) in row.report.per_fold_accuracy.iter().enumerate() {
            out.push_str(&format!("{},{},{},,,,,\n", row.setting, k + 1, acc));
        }
        out.push_str(&format!(
            "{},summary,,{},{},{},{},{}\n",
            row.setting,
            row.report.mean_accuracy,
            row.report.ci95.0,
            row.report.ci95.1,
            fmt_opt(row.report.snr_dr),
            row.report.model_bytes,
        ));
    }
    out
}

/// JSON summary (includes machine-dependent timing fields).
pub fn sweep_to_json(sweep: &SweepReport) -> Result<String> {
    serde_json::to_string_pretty(sweep).map_err(|e| Error::Format(format!("report json: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linksim::JammerKind;

    /// Small but end-to-end preset: tiny images and budgets keep this fast.
    pub(crate) fn tiny_preset(detector: DetectorKind, seed: u64) -> ExperimentPreset {
        ExperimentPreset {
            name: "tiny".into(),
            scenario: ScenarioConfig {
                snr_db: 15.0,
                jsr_db: 5.0,
                jammer: JammerKind::Awgn,
                seed,
                ..ScenarioConfig::default()
            },
            detector,
            eval: EvalParams {
                n_per_image: 2_000,
                images_per_class: 20,
                train_size: 8,
                kfolds: 4,
                image_side: 28,
                ae: AeHyper { hidden: 8, epochs: 40, ..AeHyper::default() },
                cnn: CnnHyper { channels: [4, 6, 8], epochs: 10, batch: 8, learning_rate: 0.01, ..CnnHyper::default() },
                ..EvalParams::default()
            },
        }
    }

    #[test]
    fn experiment_is_deterministic() {
        let preset = tiny_preset(DetectorKind::Ae, 42);
        let a = run_experiment(&preset).unwrap();
        let b = run_experiment(&preset).unwrap();
        assert_eq!(a.per_fold_accuracy, b.per_fold_accuracy);
        assert_eq!(a.mean_accuracy, b.mean_accuracy);
        assert_eq!(a.ci95, b.ci95);
        assert_eq!(a.snr_dr, b.snr_dr);
        assert_eq!(a.model_bytes, b.model_bytes);
        let (lo, hi) = a.ci95;
        assert!(lo <= a.mean_accuracy && a.mean_accuracy <= hi);
    }

    #[test]
    fn parallel_folds_match_sequential() {
        let mut preset = tiny_preset(DetectorKind::Ae, 7);
        let seq = run_experiment(&preset).unwrap();
        preset.eval.threads = 3;
        let par = run_experiment(&preset).unwrap();
        assert_eq!(seq.per_fold_accuracy, par.per_fold_accuracy);
        assert_eq!(seq.mean_accuracy, par.mean_accuracy);
    }

    #[test]
    fn cnn_path_runs_end_to_end() {
        let preset = tiny_preset(DetectorKind::Cnn, 3);
        let report = run_experiment(&preset).unwrap();
        assert_eq!(report.per_fold_accuracy.len(), 4);
        assert!(report.mean_accuracy >= 0.5, "mean {}", report.mean_accuracy);
        assert!(report.snr_dr.unwrap() < 1.0);
    }

    #[test]
    fn csv_is_deterministic_and_shaped() {
        let preset = tiny_preset(DetectorKind::Ae, 11);
        let report = run_experiment(&preset).unwrap();
        let sweep = SweepReport {
            name: "tiny".into(),
            control: "none".into(),
            rows: vec![SweepRow { setting: "only".into(), report }],
        };
        let csv = sweep_to_csv(&sweep);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 4 + 1, "header + folds + summary");
        assert!(lines[5].starts_with("only,summary,,"));
        // rerun end to end: identical CSV bytes
        let report2 = run_experiment(&preset).unwrap();
        let sweep2 = SweepReport {
            name: "tiny".into(),
            control: "none".into(),
            rows: vec![SweepRow { setting: "only".into(), report: report2 }],
        };
        assert_eq!(csv, sweep_to_csv(&sweep2));
    }

    #[test]
    fn insufficient_training_pool_is_data_error() {
        let mut preset = tiny_preset(DetectorKind::Ae, 5);
        preset.eval.train_size = 1000;
        assert!(matches!(run_experiment(&preset), Err(Error::Data(_))));
    }

    #[test]
    fn augmented_training_runs() {
        let mut preset = tiny_preset(DetectorKind::Ae, 13);
        preset.eval.augment = Some(AugmentStrategy::Rot180);
        let report = run_experiment(&preset).unwrap();
        assert_eq!(report.per_fold_accuracy.len(), 4);
    }

    #[test]
    fn legacy_limits_path_runs() {
        let mut preset = tiny_preset(DetectorKind::Ae, 17);
        preset.eval.limits = LimitsChoice::Legacy;
        let report = run_experiment(&preset).unwrap();
        assert_eq!(report.per_fold_accuracy.len(), 4);
    }
}
