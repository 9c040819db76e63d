//! Subcommand implementations. Every command writes its artifacts under
//! one output directory and finishes by writing a manifest there.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use jamsentry::detectors::{
    ae_detect, ae_model_bytes, ae_train, cnn_detect, cnn_model_bytes, cnn_train, load_ae, load_cnn,
    save_ae, save_cnn, AeHyper, CnnHyper, Verdict,
};
use jamsentry::error::{Error, Result};
use jamsentry::evalkit::experiment::train_full;
use jamsentry::evalkit::presets::{preset_base, Sweep};
use jamsentry::evalkit::plot::sweep_bar_chart_svg;
use jamsentry::evalkit::{
    accuracy, builtin_sweep, default_cfg, parse_preset_cfg, run_experiment, sweep_to_csv,
    sweep_to_json, ConfusionCounts, DetectorKind, ExperimentPreset, LimitsChoice,
    NormalizationMode, SweepReport, SweepRow, PRESET_NAMES,
};
use jamsentry::imaging::cache::{read_cache, write_cache};
use jamsentry::imaging::png::export_png;
use jamsentry::imaging::{histogram_image, legacy_limits, AxisLimits, GrayImage};
use jamsentry::iq::fc16::{read_fc16, read_fc16_with, sidecar_path, write_fc16};
use jamsentry::iq::{chunk, compute_normalization, normalize, IQRecording, IQSample, Label, Source};
use jamsentry::linksim::{
    gen_dataset, mix, modulate, scenario::GenOptions, JammerKind, ModScheme, OfdmParams,
    ScenarioConfig, LINK_SAMPLE_RATE_SPS,
};

use crate::manifest::{read_manifest, ManifestBuilder};

#[derive(Parser)]
#[command(name = "jamsentry", version, about = "Weak-jamming detection toolkit: OFDM link synthesis, constellation-histogram imaging, AE/CNN detectors, and the evaluation harness")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and export it as fc16 captures
    Gen(GenArgs),
    /// Validate external fc16 captures into a dataset directory
    Ingest(IngestArgs),
    /// Convert fc16 captures into a histogram-image tensor cache
    Imageize(ImageizeArgs),
    /// Train the sparse-autoencoder anomaly detector (no-jam images only)
    TrainAe(TrainAeArgs),
    /// Train the CNN binary classifier (balanced jam/no-jam images)
    TrainCnn(TrainCnnArgs),
    /// Score cached images with a trained model
    Detect(DetectArgs),
    /// Run an experiment preset with stratified K-fold evaluation
    Eval(EvalArgs),
    /// Measure image-generation and inference overhead
    Bench(BenchArgs),
    /// Render an SVG accuracy chart from an eval report
    ExportPlots(ExportPlotsArgs),
}

#[derive(Args)]
struct OutArg {
    /// Output directory (default: $JAMSENTRY_OUT, then ./jamsentry-out)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutArg {
    fn resolve(&self) -> Result<PathBuf> {
        let dir = self
            .out
            .clone()
            .or_else(|| std::env::var_os("JAMSENTRY_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("jamsentry-out"));
        std::fs::create_dir_all(&dir)?;
        Ok(dir)
    }
}

#[derive(Args)]
struct ScenarioFlags {
    #[arg(long)]
    seed: Option<u64>,
    /// bpsk | qpsk | qam16 | qam64
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    jsr_db: Option<f64>,
    /// none | awgn | deceptive
    #[arg(long)]
    jammer: Option<String>,
    /// Jammer oversampling ratio
    #[arg(long)]
    jor: Option<f64>,
}

impl ScenarioFlags {
    fn apply(&self, s: &mut ScenarioConfig) -> Result<()> {
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(scheme) = &self.scheme {
            s.scheme = ModScheme::parse(scheme)?;
            if matches!(s.jammer, JammerKind::Deceptive(_)) {
                s.jammer = JammerKind::Deceptive(s.scheme);
            }
        }
        if let Some(v) = self.snr_db {
            s.snr_db = v;
        }
        if let Some(v) = self.jsr_db {
            s.jsr_db = v;
        }
        if let Some(j) = &self.jammer {
            s.jammer = match j.as_str() {
                "none" => JammerKind::None,
                "awgn" => JammerKind::Awgn,
                "deceptive" => JammerKind::Deceptive(s.scheme),
                other => return Err(Error::Parameter(format!("unknown jammer {other:?}"))),
            };
        }
        if let Some(v) = self.jor {
            s.jor = v;
        }
        Ok(())
    }
}

#[derive(Args)]
struct EvalFlags {
    #[arg(long)]
    samples_per_image: Option<usize>,
    #[arg(long)]
    images_per_class: Option<usize>,
    /// Training budget: no-jam images (AE) or total images (CNN)
    #[arg(long)]
    train_size: Option<usize>,
    #[arg(long)]
    kfolds: Option<usize>,
    /// ae | cnn
    #[arg(long)]
    detector: Option<String>,
    /// Axis-limit choice: standard | legacy
    #[arg(long)]
    limits: Option<String>,
    /// Test-image normalization: train | per-split
    #[arg(long)]
    normalization: Option<String>,
    /// AE threshold multiplier (tau = mean + mult * std)
    #[arg(long)]
    threshold_mult: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Reject scenarios that fail the weak-regime check
    #[arg(long)]
    require_weak: Option<bool>,
    /// Keep only chunks with measured SER below 1%
    #[arg(long)]
    low_ber_filter: Option<bool>,
    /// Override AE training epochs
    #[arg(long)]
    ae_epochs: Option<usize>,
    /// Override CNN training epochs
    #[arg(long)]
    cnn_epochs: Option<usize>,
}

impl EvalFlags {
    fn apply(&self, p: &mut ExperimentPreset) -> Result<()> {
        if let Some(v) = self.samples_per_image {
            p.eval.n_per_image = v;
        }
        if let Some(v) = self.images_per_class {
            p.eval.images_per_class = v;
        }
        if let Some(v) = self.train_size {
            p.eval.train_size = v;
        }
        if let Some(v) = self.kfolds {
            p.eval.kfolds = v;
        }
        if let Some(d) = &self.detector {
            p.detector = DetectorKind::parse(d)?;
        }
        if let Some(l) = &self.limits {
            p.eval.limits = match l.as_str() {
                "standard" => LimitsChoice::Standard,
                "legacy" => LimitsChoice::Legacy,
                other => return Err(Error::Parameter(format!("unknown limits {other:?}"))),
            };
        }
        if let Some(n) = &self.normalization {
            p.eval.normalization = match n.as_str() {
                "train" => NormalizationMode::TrainStats,
                "per-split" => NormalizationMode::PerSplit,
                other => return Err(Error::Parameter(format!("unknown normalization {other:?}"))),
            };
        }
        if let Some(v) = self.threshold_mult {
            p.eval.ae.threshold_mult = v;
        }
        if let Some(v) = self.threads {
            p.eval.threads = v;
        }
        if let Some(v) = self.require_weak {
            p.eval.require_weak = v;
        }
        if let Some(v) = self.low_ber_filter {
            p.eval.low_ber_filter = v;
        }
        if let Some(v) = self.ae_epochs {
            p.eval.ae.epochs = v;
        }
        if let Some(v) = self.cnn_epochs {
            p.eval.cnn.epochs = v;
        }
        Ok(())
    }
}

#[derive(Args)]
struct GenArgs {
    /// Preset supplying scenario defaults
    #[arg(long, default_value = "single")]
    preset: String,
    #[command(flatten)]
    scenario: ScenarioFlags,
    #[arg(long)]
    samples_per_image: Option<usize>,
    #[arg(long)]
    images_per_class: Option<usize>,
    #[arg(long)]
    require_weak: Option<bool>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct IngestArgs {
    /// fc16 capture file (repeatable)
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Label when a file has no sidecar: jam | nojam
    #[arg(long)]
    label: Option<String>,
    /// Sample rate when a file has no sidecar
    #[arg(long)]
    sample_rate: Option<u64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct ImageizeArgs {
    /// Dataset directory holding fc16 captures (from gen or ingest)
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    samples_per_image: usize,
    #[arg(long, default_value_t = 224)]
    image_side: usize,
    /// standard | legacy
    #[arg(long, default_value = "standard")]
    limits: String,
    /// Scheme for legacy limits
    #[arg(long, default_value = "bpsk")]
    scheme: String,
    /// Normalization source: nojam-only captures (train) or all captures (all)
    #[arg(long, default_value = "train")]
    stats: String,
    /// Also export the first N images per class as PNG
    #[arg(long, default_value_t = 0)]
    png: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct TrainAeArgs {
    /// Image cache from imageize
    #[arg(long)]
    images: PathBuf,
    #[arg(long, default_value_t = 250)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    #[arg(long, default_value_t = 3.5)]
    threshold_mult: f64,
    #[arg(long, default_value_t = 0.05)]
    sparsity_target: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct TrainCnnArgs {
    #[arg(long)]
    images: PathBuf,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 35)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct DetectArgs {
    /// Trained model (.aem or .cnm)
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    images: PathBuf,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct EvalArgs {
    /// Built-in preset name (single, exp1, exp2, exp3, exp4, exp6, exp9)
    #[arg(long)]
    preset: Option<String>,
    /// Preset config file (key = value lines)
    #[arg(long)]
    preset_file: Option<PathBuf>,
    /// Re-run the sweep recorded in a manifest
    #[arg(long)]
    from_manifest: Option<PathBuf>,
    #[command(flatten)]
    scenario: ScenarioFlags,
    #[command(flatten)]
    eval: EvalFlags,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct ExportPlotsArgs {
    /// report.json produced by eval
    #[arg(long)]
    report: PathBuf,
    #[command(flatten)]
    out: OutArg,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Ingest(a) => cmd_ingest(a),
        Command::Imageize(a) => cmd_imageize(a),
        Command::TrainAe(a) => cmd_train_ae(a),
        Command::TrainCnn(a) => cmd_train_cnn(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::ExportPlots(a) => cmd_export_plots(a),
    }
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let out = args.out.resolve()?;
    let mut preset = preset_base(&args.preset, args.scenario.seed.unwrap_or(0))?;
    args.scenario.apply(&mut preset.scenario)?;
    if let Some(v) = args.samples_per_image {
        preset.eval.n_per_image = v;
    }
    if let Some(v) = args.images_per_class {
        preset.eval.images_per_class = v;
    }
    let require_weak = args.require_weak.unwrap_or(preset.eval.require_weak);
    let scenario = &preset.scenario;

    let dataset = gen_dataset(
        scenario,
        preset.eval.n_per_image,
        preset.eval.images_per_class,
        GenOptions { require_weak },
    )?;

    // concatenate per class and normalize the whole dataset into [-1, 1]
    // so the int16 export does not clip
    let mut recordings: Vec<IQRecording> = Vec::new();
    for class in [Label::NoJam, Label::Jam] {
        let samples: Vec<IQSample> = dataset
            .records
            .iter()
            .filter(|r| r.chunk.label == class)
            .flat_map(|r| r.chunk.samples.iter().copied())
            .collect();
        if samples.is_empty() {
            continue;
        }
        recordings.push(IQRecording::new(
            samples,
            LINK_SAMPLE_RATE_SPS,
            class,
            Source::Synthetic(dataset.scenario_id.clone()),
        )?);
    }
    let stats = compute_normalization(recordings.iter())?;

    let config = json!({
        "scenario": scenario,
        "samples_per_image": preset.eval.n_per_image,
        "images_per_class": preset.eval.images_per_class,
        "require_weak": require_weak,
        "export_normalization": stats,
    });
    let mut manifest = ManifestBuilder::new(&out, "gen", scenario.seed, config);

    for rec in &recordings {
        let normed = normalize(rec, &stats);
        let path = out.join(format!("{}.fc16", rec.label.as_str()));
        write_fc16(&normed, &path, Some(dataset.scenario_id.clone()))?;
        manifest.add_artifact(&path, true)?;
        manifest.add_artifact(&sidecar_path(&path), true)?;
    }

    let stats_path = out.join("stats.json");
    std::fs::write(
        &stats_path,
        serde_json::to_string_pretty(&stats).map_err(|e| Error::Format(e.to_string()))?,
    )?;
    manifest.add_artifact(&stats_path, true)?;

    // per-chunk symbol-error rates, for the low-BER filter downstream
    let sers: Vec<serde_json::Value> = dataset
        .records
        .iter()
        .map(|r| json!({"label": r.chunk.label.as_str(), "ser": r.ser}))
        .collect();
    let ser_path = out.join("chunks.json");
    std::fs::write(
        &ser_path,
        serde_json::to_string_pretty(&json!({
            "samples_per_image": preset.eval.n_per_image,
            "chunks": sers,
        }))
        .map_err(|e| Error::Format(e.to_string()))?,
    )?;
    manifest.add_artifact(&ser_path, true)?;

    let path = manifest.write()?;
    println!("wrote dataset to {} (manifest {})", out.display(), path.display());
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let out = args.out.resolve()?;
    let label = args.label.as_deref().map(Label::parse).transpose()?;
    let mut manifest = ManifestBuilder::new(
        &out,
        "ingest",
        0,
        json!({
            "inputs": args.input.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "label": args.label,
            "sample_rate": args.sample_rate,
        }),
    );
    for input in &args.input {
        let rec = if sidecar_path(input).exists() {
            read_fc16(input)?
        } else {
            let label = label.ok_or_else(|| {
                Error::Parameter(format!("{}: no sidecar; pass --label", input.display()))
            })?;
            let rate = args.sample_rate.ok_or_else(|| {
                Error::Parameter(format!("{}: no sidecar; pass --sample-rate", input.display()))
            })?;
            read_fc16_with(input, rate, label)?
        };
        let name = input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "capture".into());
        let dest = out.join(format!("{name}.fc16"));
        write_fc16(&rec, &dest, None)?;
        manifest.add_artifact(&dest, true)?;
        manifest.add_artifact(&sidecar_path(&dest), true)?;
        println!(
            "ingested {} ({} samples, {} sps, label {})",
            input.display(),
            rec.len(),
            rec.sample_rate_sps,
            rec.label.as_str()
        );
    }
    manifest.write()?;
    Ok(())
}

fn list_fc16(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "fc16"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Data(format!("no .fc16 captures in {}", dir.display())));
    }
    Ok(files)
}

fn cmd_imageize(args: ImageizeArgs) -> Result<()> {
    let out = args.out.resolve()?;
    let scheme = ModScheme::parse(&args.scheme)?;
    let limits = match args.limits.as_str() {
        "standard" => AxisLimits::standard(),
        "legacy" => legacy_limits(scheme),
        other => return Err(Error::Parameter(format!("unknown limits {other:?}"))),
    };

    let recordings: Vec<IQRecording> = list_fc16(&args.data)?
        .iter()
        .map(|p| read_fc16(p))
        .collect::<Result<_>>()?;
    let stats = match args.stats.as_str() {
        "train" => {
            let nojam: Vec<&IQRecording> =
                recordings.iter().filter(|r| r.label == Label::NoJam).collect();
            if nojam.is_empty() {
                return Err(Error::Data("stats=train needs at least one nojam capture".into()));
            }
            compute_normalization(nojam)?
        }
        "all" => compute_normalization(recordings.iter())?,
        other => return Err(Error::Parameter(format!("unknown stats source {other:?}"))),
    };

    let mut images: Vec<(GrayImage, Label)> = Vec::new();
    for rec in &recordings {
        let normed = normalize(rec, &stats);
        for c in chunk(&normed, args.samples_per_image)? {
            let img = histogram_image(&c, args.image_side, args.image_side, &limits)?;
            images.push((img.without_counts(), rec.label));
        }
    }
    if images.is_empty() {
        return Err(Error::Data(format!(
            "captures are shorter than one window of {} samples",
            args.samples_per_image
        )));
    }

    let config = json!({
        "samples_per_image": args.samples_per_image,
        "image_side": args.image_side,
        "limits": args.limits,
        "scheme": args.scheme,
        "stats_source": args.stats,
        "stats": stats,
    });
    let mut manifest = ManifestBuilder::new(&out, "imageize", 0, config);

    let cache_path = out.join("images.jsic");
    write_cache(&cache_path, &images)?;
    manifest.add_artifact(&cache_path, true)?;

    let stats_path = out.join("stats.json");
    std::fs::write(
        &stats_path,
        serde_json::to_string_pretty(&stats).map_err(|e| Error::Format(e.to_string()))?,
    )?;
    manifest.add_artifact(&stats_path, true)?;

    if args.png > 0 {
        let mut counters = [0usize; 2];
        for (img, label) in &images {
            let slot = *label as usize;
            if counters[slot] >= args.png {
                continue;
            }
            let path = out.join(format!("{}_{:03}.png", label.as_str(), counters[slot]));
            export_png(img, &path)?;
            manifest.add_artifact(&path, true)?;
            counters[slot] += 1;
        }
    }

    let (nojam, jam) = images.iter().fold((0, 0), |(n, j), (_, l)| match l {
        Label::NoJam => (n + 1, j),
        Label::Jam => (n, j + 1),
    });
    manifest.write()?;
    println!(
        "wrote {} images ({nojam} nojam, {jam} jam) to {}",
        images.len(),
        cache_path.display()
    );
    Ok(())
}

fn cmd_train_ae(args: TrainAeArgs) -> Result<()> {
    let out = args.out.resolve()?;
    let images = read_cache(&args.images)?;
    let nojam: Vec<GrayImage> = images
        .into_iter()
        .filter(|(_, l)| *l == Label::NoJam)
        .map(|(im, _)| im)
        .collect();
    let hyper = AeHyper {
        hidden: args.hidden,
        epochs: args.epochs,
        threshold_mult: args.threshold_mult,
        sparsity_target: args.sparsity_target,
        seed: args.seed,
        ..AeHyper::default()
    };
    let result = ae_train(&nojam, &hyper)?;

    let config = json!({"hyper": hyper, "images": args.images.display().to_string(), "n_train": nojam.len()});
    let mut manifest = ManifestBuilder::new(&out, "train-ae", args.seed, config);

    let model_path = out.join("model.aem");
    save_ae(&result.model, &model_path)?;
    manifest.add_artifact(&model_path, true)?;

    let mut log = String::from("epoch,loss,mean_mse\n");
    for row in &result.log {
        log.push_str(&format!("{},{},{}\n", row.epoch, row.loss, row.mean_mse));
    }
    let log_path = out.join("train_log.csv");
    std::fs::write(&log_path, log)?;
    manifest.add_artifact(&log_path, true)?;
    manifest.write()?;

    let thr = result.model.threshold.expect("trained model has a threshold");
    println!(
        "trained AE on {} no-jam images: tau = {} (mean {} + {} * std {}), model {} bytes",
        nojam.len(),
        thr.tau,
        thr.mse_train_mean,
        thr.mult,
        thr.mse_train_std,
        ae_model_bytes(&result.model)
    );
    Ok(())
}

fn cmd_train_cnn(args: TrainCnnArgs) -> Result<()> {
    let out = args.out.resolve()?;
    let images = read_cache(&args.images)?;
    let hyper = CnnHyper {
        epochs: args.epochs,
        batch: args.batch,
        seed: args.seed,
        ..CnnHyper::default()
    };
    let result = cnn_train(&images, &hyper)?;

    let config = json!({"hyper": hyper, "images": args.images.display().to_string(), "n_train": images.len()});
    let mut manifest = ManifestBuilder::new(&out, "train-cnn", args.seed, config);

    let model_path = out.join("model.cnm");
    save_cnn(&result.model, &model_path)?;
    manifest.add_artifact(&model_path, true)?;

    let mut log = String::from("epoch,loss,train_accuracy\n");
    for row in &result.log {
        log.push_str(&format!("{},{},{}\n", row.epoch, row.loss, row.train_accuracy));
    }
    let log_path = out.join("train_log.csv");
    std::fs::write(&log_path, log)?;
    manifest.add_artifact(&log_path, true)?;
    manifest.write()?;

    println!(
        "trained CNN on {} images: final loss {}, model {} bytes",
        images.len(),
        result.log.last().map(|r| r.loss).unwrap_or(f64::NAN),
        cnn_model_bytes(&result.model)
    );
    Ok(())
}

enum AnyModel {
    Ae(Box<jamsentry::detectors::AeModel>),
    Cnn(Box<jamsentry::detectors::CnnModel>),
}

fn sniff_model(path: &Path) -> Result<AnyModel> {
    let mut magic = [0u8; 4];
    use std::io::Read;
    std::fs::File::open(path)?
        .read_exact(&mut magic)
        .map_err(|_| Error::Format(format!("{}: too short for a model file", path.display())))?;
    match &magic {
        b"JSAE" => Ok(AnyModel::Ae(Box::new(load_ae(path)?))),
        b"JSCN" => Ok(AnyModel::Cnn(Box::new(load_cnn(path)?))),
        _ => Err(Error::Format(format!("{}: not a jamsentry model", path.display()))),
    }
}

fn cmd_detect(args: DetectArgs) -> Result<()> {
    let out = args.out.resolve()?;
    let model = sniff_model(&args.model)?;
    let images = read_cache(&args.images)?;

    let mut counts = ConfusionCounts::default();
    let mut rows = String::from("image,truth,predicted,score\n");
    for (i, (img, truth)) in images.iter().enumerate() {
        let Verdict { label, score } = match &model {
            AnyModel::Ae(m) => ae_detect(m, img)?,
            AnyModel::Cnn(m) => cnn_detect(m, img)?,
        };
        counts.tally(*truth, label);
        rows.push_str(&format!("{i},{},{},{score}\n", truth.as_str(), label.as_str()));
    }

    let config = json!({
        "model": args.model.display().to_string(),
        "images": args.images.display().to_string(),
    });
    let mut manifest = ManifestBuilder::new(&out, "detect", 0, config);
    let verdicts_path = out.join("verdicts.csv");
    std::fs::write(&verdicts_path, rows)?;
    manifest.add_artifact(&verdicts_path, true)?;
    manifest.write()?;

    println!(
        "scored {} images: accuracy {} (tp {} tn {} fp {} fn {})",
        images.len(),
        accuracy(&counts)?,
        counts.tp,
        counts.tn,
        counts.fp,
        counts.fn_
    );
    Ok(())
}

fn resolve_eval_sweep(args: &EvalArgs) -> Result<Sweep> {
    if let Some(manifest_path) = &args.from_manifest {
        let manifest = read_manifest(manifest_path)?;
        let sweep: Vec<(String, ExperimentPreset)> =
            serde_json::from_value(manifest.config.get("settings").cloned().ok_or_else(|| {
                Error::Format("manifest has no eval settings to re-run".into())
            })?)
            .map_err(|e| Error::Format(format!("manifest settings: {e}")))?;
        return Ok(Sweep {
            name: manifest
                .config
                .get("name")
                .and_then(|v| v.as_str())
                .unwrap_or("manifest")
                .to_string(),
            control: manifest
                .config
                .get("control")
                .and_then(|v| v.as_str())
                .unwrap_or("none")
                .to_string(),
            settings: sweep,
        });
    }

    let (name, mut base) = if let Some(file) = &args.preset_file {
        parse_preset_cfg(&std::fs::read_to_string(file)?)?
    } else {
        let name = args.preset.clone().unwrap_or_else(|| "single".into());
        let base = preset_base(&name, 0)?;
        (name, base)
    };
    args.scenario.apply(&mut base.scenario)?;
    args.eval.apply(&mut base)?;
    builtin_sweep(&name, &base)
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let out = args.out.resolve()?;
    let sweep = resolve_eval_sweep(&args)?;
    let seed = sweep.settings.first().map(|(_, p)| p.scenario.seed).unwrap_or(0);

    let mut rows = Vec::new();
    for (setting, preset) in &sweep.settings {
        let t = Instant::now();
        let report = run_experiment(preset)?;
        println!(
            "{} [{setting}]: accuracy {:.4} ci ({:.4}, {:.4}){} [{:.1}s]",
            sweep.name,
            report.mean_accuracy,
            report.ci95.0,
            report.ci95.1,
            report
                .snr_dr
                .map(|v| format!(" snr_dr {v:.4}"))
                .unwrap_or_default(),
            t.elapsed().as_secs_f64()
        );
        rows.push(SweepRow { setting: setting.clone(), report });
    }
    let report = SweepReport { name: sweep.name.clone(), control: sweep.control.clone(), rows };

    let config = json!({
        "name": sweep.name,
        "control": sweep.control,
        "settings": sweep.settings,
    });
    let mut manifest = ManifestBuilder::new(&out, "eval", seed, config);

    let csv_path = out.join("report.csv");
    std::fs::write(&csv_path, sweep_to_csv(&report))?;
    manifest.add_artifact(&csv_path, true)?;

    // JSON carries wall-clock timings, so it is not hashed
    let json_path = out.join("report.json");
    std::fs::write(&json_path, sweep_to_json(&report)?)?;
    manifest.add_artifact(&json_path, false)?;

    // drop a cfg snapshot beside the report for provenance
    if PRESET_NAMES.contains(&sweep.name.as_str()) {
        let cfg_path = out.join(format!("{}.cfg", sweep.name));
        std::fs::write(&cfg_path, default_cfg(&sweep.name)?)?;
        manifest.add_artifact(&cfg_path, true)?;
    }

    let path = manifest.write()?;
    println!("report written to {} (manifest {})", csv_path.display(), path.display());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let out = args.out.resolve()?;
    let side = 224usize;

    // tiny training budgets: inference cost does not depend on fit quality
    let mut micro = preset_base("single", args.seed)?;
    micro.eval.n_per_image = 10_000;
    micro.eval.images_per_class = 6;
    micro.eval.train_size = 4;
    micro.eval.require_weak = false;
    micro.eval.low_ber_filter = false;
    micro.eval.ae.epochs = 2;
    micro.detector = DetectorKind::Ae;
    let ae = match train_full(&micro)? {
        jamsentry::evalkit::experiment::TrainedDetector::Ae(m) => m,
        _ => unreachable!(),
    };
    micro.detector = DetectorKind::Cnn;
    micro.eval.cnn.epochs = 1;
    let cnn = match train_full(&micro)? {
        jamsentry::evalkit::experiment::TrainedDetector::Cnn(m) => m,
        _ => unreachable!(),
    };

    let mut csv = String::from(
        "samples_per_image,image_gen_ms,ae_infer_ms,cnn_infer_ms,ae_model_bytes,cnn_model_bytes,image_bytes\n",
    );
    println!("samples/image  image-gen ms  AE infer ms  CNN infer ms");
    let mut last_ratio = 0.0;
    for n in [10_000usize, 50_000, 100_000] {
        let ofdm = OfdmParams::default();
        let bits: Vec<u8> = (0..ofdm.bits_per_ofdm_symbol(ModScheme::Bpsk) * n.div_ceil(ofdm.symbol_len()))
            .map(|k| (k % 2) as u8)
            .collect();
        let signal = modulate(&bits, ModScheme::Bpsk, &ofdm)?;
        let mixed = mix(&signal, None, 15.0, 0.0, args.seed)?.recording;
        let mut samples = mixed.samples;
        samples.truncate(n);
        let rec = IQRecording::new(samples, LINK_SAMPLE_RATE_SPS, Label::NoJam, Source::Synthetic("bench".into()))?;
        let stats = compute_normalization([&rec])?;
        let normed = normalize(&rec, &stats);
        let chunks = chunk(&normed, n)?;
        let probe = &chunks[0];

        let image_gen_ms = median_ms(20, || {
            let _ = histogram_image(probe, side, side, &AxisLimits::standard()).unwrap();
        });
        let img = histogram_image(probe, side, side, &AxisLimits::standard())?.without_counts();
        let ae_ms = median_ms(20, || {
            let _ = ae_detect(&ae, &img).unwrap();
        });
        let cnn_ms = median_ms(20, || {
            let _ = cnn_detect(&cnn, &img).unwrap();
        });
        last_ratio = cnn_ms / ae_ms;
        println!("{n:>13}  {image_gen_ms:>12.3}  {ae_ms:>11.3}  {cnn_ms:>12.3}");
        csv.push_str(&format!(
            "{n},{image_gen_ms},{ae_ms},{cnn_ms},{},{},{}\n",
            ae_model_bytes(&ae),
            cnn_model_bytes(&cnn),
            8 * side * side,
        ));
    }
    println!(
        "model bytes: AE {} CNN {}; CNN/AE inference ratio {last_ratio:.2}",
        ae_model_bytes(&ae),
        cnn_model_bytes(&cnn)
    );

    let mut manifest = ManifestBuilder::new(&out, "bench", args.seed, json!({"image_side": side}));
    let csv_path = out.join("bench.csv");
    std::fs::write(&csv_path, csv)?;
    // timings are machine-dependent: listed, not hashed
    manifest.add_artifact(&csv_path, false)?;
    manifest.write()?;
    Ok(())
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

fn cmd_export_plots(args: ExportPlotsArgs) -> Result<()> {
    let out = args.out.resolve()?;
    let report: SweepReport = serde_json::from_slice(&std::fs::read(&args.report)?)
        .map_err(|e| Error::Format(format!("report {}: {e}", args.report.display())))?;
    let svg = sweep_bar_chart_svg(&report);
    let config = json!({"report": args.report.display().to_string()});
    let mut manifest = ManifestBuilder::new(&out, "export-plots", 0, config);
    let path = out.join(format!("{}.svg", report.name));
    std::fs::write(&path, svg)?;
    manifest.add_artifact(&path, true)?;
    manifest.write()?;
    println!("wrote {}", path.display());
    Ok(())
}
