//! Named experiment presets and their plain-text config files.
//!
//! Each preset reproduces one of the synthetic experiment analogues as a
//! sweep over a single control variable. Preset files are `key = value`
//! lines with `#` comments; `default_cfg` emits the shipped defaults and
//! `parse_preset_cfg` reads one back (possibly edited).

use crate::detectors::{AeHyper, CnnHyper};
use crate::error::{Error, Result};
use crate::evalkit::experiment::{
    DetectorKind, EvalParams, ExperimentPreset, LimitsChoice, NormalizationMode,
};
use crate::imaging::AugmentStrategy;
use crate::linksim::{JammerKind, ModScheme, ScenarioConfig};

/// The shipped experiment presets.
pub const PRESET_NAMES: [&str; 7] = ["single", "exp1", "exp2", "exp3", "exp4", "exp6", "exp9"];

/// A named sweep over one control variable, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub name: String,
    pub control: String,
    pub settings: Vec<(String, ExperimentPreset)>,
}

/// Expand a preset name into its sweep, starting from `base` (which
/// carries the seed and any CLI overrides).
pub fn builtin_sweep(name: &str, base: &ExperimentPreset) -> Result<Sweep> {
    let mut settings: Vec<(String, ExperimentPreset)> = Vec::new();
    let control;
    match name {
        "single" => {
            control = "none";
            settings.push(("single".into(), base.clone()));
        }
        "exp1" => {
            // samples per image sweep
            control = "samples_per_image";
            for n in [10_000usize, 50_000, 100_000] {
                let mut p = base.clone();
                p.eval.n_per_image = n;
                settings.push((format!("n={n}"), p));
            }
        }
        "exp2" => {
            control = "train_size";
            for s in [2usize, 9, 18, 36, 54, 72, 120] {
                let mut p = base.clone();
                p.eval.train_size = s;
                settings.push((format!("train={s}"), p));
            }
        }
        "exp3" => {
            control = "augmentation";
            let strategies: [(&str, Option<AugmentStrategy>); 6] = [
                ("none", None),
                ("rot180", Some(AugmentStrategy::Rot180)),
                ("fliplr", Some(AugmentStrategy::FlipLR)),
                ("flipud", Some(AugmentStrategy::FlipUD)),
                ("contrast", Some(AugmentStrategy::contrast_default())),
                ("brightness", Some(AugmentStrategy::brightness_default())),
            ];
            for (label, strategy) in strategies {
                let mut p = base.clone();
                p.eval.augment = strategy;
                settings.push((label.into(), p));
            }
        }
        "exp4" => {
            control = "jor";
            for jor in [1.0f64, 2.0, 3.0, 4.0] {
                let mut p = base.clone();
                p.scenario.jor = jor;
                settings.push((format!("jor={jor}"), p));
            }
        }
        "exp6" => {
            control = "jammer";
            for (label, jammer) in [
                ("awgn", JammerKind::Awgn),
                ("deceptive", JammerKind::Deceptive(base.scenario.scheme)),
            ] {
                let mut p = base.clone();
                p.scenario.jammer = jammer;
                settings.push((label.into(), p));
            }
        }
        "exp9" => {
            control = "scheme";
            for scheme in ModScheme::ALL {
                let mut p = base.clone();
                p.scenario.scheme = scheme;
                // a deceptive jammer mimics the link it attacks
                if matches!(p.scenario.jammer, JammerKind::Deceptive(_)) {
                    p.scenario.jammer = JammerKind::Deceptive(scheme);
                }
                settings.push((scheme.name().into(), p));
            }
        }
        other => {
            return Err(Error::Parameter(format!(
                "unknown preset {other:?}; known presets: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    }
    let mut sweep_name = name.to_string();
    if base.name != "default" && base.name != sweep_name {
        sweep_name = base.name.clone();
    }
    Ok(Sweep { name: sweep_name, control: control.into(), settings })
}

/// Experiment-specific base settings: the synthetic translation of each
/// experiment's measurement parameters (jammer gains become JSR, link
/// gains become SNR).
pub fn preset_base(name: &str, seed: u64) -> Result<ExperimentPreset> {
    let mut p = ExperimentPreset {
        name: name.into(),
        scenario: ScenarioConfig {
            scheme: ModScheme::Bpsk,
            snr_db: 15.0,
            jsr_db: -6.0,
            jammer: JammerKind::Awgn,
            jor: 1.0,
            seed,
            ..ScenarioConfig::default()
        },
        detector: DetectorKind::Ae,
        eval: EvalParams {
            n_per_image: 100_000,
            images_per_class: 200,
            train_size: 150,
            require_weak: true,
            low_ber_filter: true,
            ..EvalParams::default()
        },
    };
    match name {
        "single" | "exp2" | "exp4" | "exp6" => {}
        "exp1" => {
            // stronger jammer than the reference setup, as in the original
            // samples-per-image study
            p.scenario.jsr_db = -4.0;
        }
        "exp3" => {
            p.eval.n_per_image = 50_000;
        }
        "exp9" => {
            // the highest-order scheme needs a clean channel to stay in
            // the low-BER regime
            p.scenario.snr_db = 30.0;
            p.scenario.jsr_db = -6.0;
        }
        other => {
            return Err(Error::Parameter(format!(
                "unknown preset {other:?}; known presets: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    }
    Ok(p)
}

/// The shipped `.cfg` text for a preset.
pub fn default_cfg(name: &str) -> Result<String> {
    let p = preset_base(name, 0)?;
    let description = match name {
        "single" => "one scenario, no sweep",
        "exp1" => "samples-per-image sweep (10k / 50k / 100k)",
        "exp2" => "training-set size sweep (2..120 images)",
        "exp3" => "augmentation strategies at 50k samples per image",
        "exp4" => "jammer oversampling ratio sweep (1..4)",
        "exp6" => "jammer signal type: noise vs deceptive",
        "exp9" => "modulation scheme sweep (BPSK..64-QAM)",
        _ => unreachable!("preset_base validated the name"),
    };
    Ok(format!(
        "# {name}: {description}\n\
         # Jammer gain knobs from the measurement campaign translate to jsr_db;\n\
         # transmitter/receiver gains translate to snr_db.\n\
         experiment = {name}\n\
         detector = {detector}\n\
         scheme = {scheme}\n\
         snr_db = {snr}\n\
         jsr_db = {jsr}\n\
         jammer = {jammer}\n\
         jor = {jor}\n\
         samples_per_image = {n}\n\
         images_per_class = {ipc}\n\
         train_size = {train}\n\
         kfolds = {k}\n\
         image_side = {side}\n\
         limits = {limits}\n\
         normalization = {norm}\n\
         require_weak = {weak}\n\
         low_ber_filter = {lowber}\n\
         threshold_mult = {mult}\n\
         threads = {threads}\n\
         seed = 0\n",
        name = name,
        detector = p.detector.name(),
        scheme = p.scenario.scheme.name(),
        snr = p.scenario.snr_db,
        jsr = p.scenario.jsr_db,
        jammer = jammer_key(&p.scenario.jammer),
        jor = p.scenario.jor,
        n = p.eval.n_per_image,
        ipc = p.eval.images_per_class,
        train = p.eval.train_size,
        k = p.eval.kfolds,
        side = p.eval.image_side,
        limits = match p.eval.limits {
            LimitsChoice::Standard => "standard",
            LimitsChoice::Legacy => "legacy",
        },
        norm = match p.eval.normalization {
            NormalizationMode::TrainStats => "train",
            NormalizationMode::PerSplit => "per-split",
        },
        weak = p.eval.require_weak,
        lowber = p.eval.low_ber_filter,
        mult = p.eval.ae.threshold_mult,
        threads = p.eval.threads,
    ))
}

fn jammer_key(j: &JammerKind) -> &'static str {
    match j {
        JammerKind::None => "none",
        JammerKind::Awgn => "awgn",
        JammerKind::Deceptive(_) => "deceptive",
    }
}

/// Parse a preset config file into (experiment name, base preset).
pub fn parse_preset_cfg(text: &str) -> Result<(String, ExperimentPreset)> {
    let mut experiment = String::from("single");
    let mut p = ExperimentPreset {
        name: "file".into(),
        scenario: ScenarioConfig::default(),
        detector: DetectorKind::Ae,
        eval: EvalParams::default(),
    };
    let mut deceptive = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Format(format!("preset line {}: expected key = value, got {line:?}", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| Error::Format(format!("preset line {}: bad {what}: {value:?}", lineno + 1));
        match key {
            "experiment" => experiment = value.to_string(),
            "detector" => p.detector = DetectorKind::parse(value)?,
            "scheme" => p.scenario.scheme = ModScheme::parse(value)?,
            "snr_db" => p.scenario.snr_db = value.parse().map_err(|_| bad("snr_db"))?,
            "jsr_db" => p.scenario.jsr_db = value.parse().map_err(|_| bad("jsr_db"))?,
            "jammer" => {
                match value {
                    "none" => p.scenario.jammer = JammerKind::None,
                    "awgn" => p.scenario.jammer = JammerKind::Awgn,
                    "deceptive" => deceptive = true,
                    _ => return Err(bad("jammer")),
                };
            }
            "jor" => p.scenario.jor = value.parse().map_err(|_| bad("jor"))?,
            "samples_per_image" => p.eval.n_per_image = value.parse().map_err(|_| bad("samples_per_image"))?,
            "images_per_class" => p.eval.images_per_class = value.parse().map_err(|_| bad("images_per_class"))?,
            "train_size" => p.eval.train_size = value.parse().map_err(|_| bad("train_size"))?,
            "kfolds" => p.eval.kfolds = value.parse().map_err(|_| bad("kfolds"))?,
            "image_side" => p.eval.image_side = value.parse().map_err(|_| bad("image_side"))?,
            "limits" => {
                p.eval.limits = match value {
                    "standard" => LimitsChoice::Standard,
                    "legacy" => LimitsChoice::Legacy,
                    _ => return Err(bad("limits")),
                }
            }
            "normalization" => {
                p.eval.normalization = match value {
                    "train" => NormalizationMode::TrainStats,
                    "per-split" => NormalizationMode::PerSplit,
                    _ => return Err(bad("normalization")),
                }
            }
            "require_weak" => p.eval.require_weak = value.parse().map_err(|_| bad("require_weak"))?,
            "low_ber_filter" => p.eval.low_ber_filter = value.parse().map_err(|_| bad("low_ber_filter"))?,
            "threshold_mult" => p.eval.ae.threshold_mult = value.parse().map_err(|_| bad("threshold_mult"))?,
            "threads" => p.eval.threads = value.parse().map_err(|_| bad("threads"))?,
            "seed" => p.scenario.seed = value.parse().map_err(|_| bad("seed"))?,
            "ae_epochs" => p.eval.ae.epochs = value.parse().map_err(|_| bad("ae_epochs"))?,
            "cnn_epochs" => p.eval.cnn.epochs = value.parse().map_err(|_| bad("cnn_epochs"))?,
            other => return Err(Error::Format(format!("preset line {}: unknown key {other:?}", lineno + 1))),
        }
    }
    if deceptive {
        p.scenario.jammer = JammerKind::Deceptive(p.scenario.scheme);
    }
    p.name = experiment.clone();
    Ok((experiment, p))
}

/// Default hyper sets exposed so the CLI help can print them.
pub fn default_hypers() -> (AeHyper, CnnHyper) {
    (AeHyper::default(), CnnHyper::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_sweeps_have_expected_settings() {
        let base = preset_base("exp4", 7).unwrap();
        let sweep = builtin_sweep("exp4", &base).unwrap();
        assert_eq!(sweep.control, "jor");
        assert_eq!(sweep.settings.len(), 4);
        let jors: Vec<f64> = sweep.settings.iter().map(|(_, p)| p.scenario.jor).collect();
        assert_eq!(jors, vec![1.0, 2.0, 3.0, 4.0]);

        let exp9 = builtin_sweep("exp9", &preset_base("exp9", 1).unwrap()).unwrap();
        assert_eq!(exp9.settings.len(), 4);
        let exp1 = builtin_sweep("exp1", &preset_base("exp1", 1).unwrap()).unwrap();
        let ns: Vec<usize> = exp1.settings.iter().map(|(_, p)| p.eval.n_per_image).collect();
        assert_eq!(ns, vec![10_000, 50_000, 100_000]);
        let exp2 = builtin_sweep("exp2", &preset_base("exp2", 1).unwrap()).unwrap();
        assert_eq!(exp2.settings.len(), 7);
        let exp3 = builtin_sweep("exp3", &preset_base("exp3", 1).unwrap()).unwrap();
        assert_eq!(exp3.settings.len(), 6);
        assert!(builtin_sweep("exp5", &base).is_err());
    }

    #[test]
    fn cfg_roundtrip_for_all_presets() {
        for name in PRESET_NAMES {
            let text = default_cfg(name).unwrap();
            let (experiment, parsed) = parse_preset_cfg(&text).unwrap();
            assert_eq!(experiment, name);
            let expected = preset_base(name, 0).unwrap();
            assert_eq!(parsed.scenario.scheme, expected.scenario.scheme, "{name}");
            assert_eq!(parsed.scenario.snr_db, expected.scenario.snr_db, "{name}");
            assert_eq!(parsed.scenario.jsr_db, expected.scenario.jsr_db, "{name}");
            assert_eq!(parsed.eval.n_per_image, expected.eval.n_per_image, "{name}");
            assert_eq!(parsed.eval.train_size, expected.eval.train_size, "{name}");
            assert_eq!(parsed.eval.require_weak, expected.eval.require_weak, "{name}");
        }
    }

    #[test]
    fn cfg_parse_errors() {
        assert!(matches!(parse_preset_cfg("nonsense"), Err(Error::Format(_))));
        assert!(matches!(parse_preset_cfg("unknown_key = 3"), Err(Error::Format(_))));
        assert!(matches!(parse_preset_cfg("snr_db = abc"), Err(Error::Format(_))));
    }

    #[test]
    fn deceptive_jammer_tracks_scheme() {
        let (_, p) = parse_preset_cfg("scheme = qam16\njammer = deceptive\n").unwrap();
        assert_eq!(p.scenario.jammer, JammerKind::Deceptive(ModScheme::Qam16));
        // order should not matter
        let (_, p2) = parse_preset_cfg("jammer = deceptive\nscheme = qam16\n").unwrap();
        assert_eq!(p2.scenario.jammer, JammerKind::Deceptive(ModScheme::Qam16));
    }
}
