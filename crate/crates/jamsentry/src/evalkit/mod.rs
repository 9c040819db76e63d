//! Evaluation protocol: accuracy over confusion counts, stratified K-fold
//! cross-validation, Student-t confidence intervals, SNR degradation
//! ratio, the low-BER filter, and experiment orchestration with overhead
//! measurement.

pub mod experiment;
pub mod kfold;
pub mod plot;
pub mod presets;
pub mod snr;
pub mod stats;

pub use experiment::{
    run_experiment, sweep_to_csv, sweep_to_json, DetectorKind, EvalParams, EvalReport,
    ExperimentPreset, LimitsChoice, NormalizationMode, SweepReport, SweepRow, Timings,
};
pub use kfold::kfold_split;
pub use presets::{builtin_sweep, default_cfg, parse_preset_cfg, PRESET_NAMES};
pub use snr::{low_ber_filter, moment_snr, snr_dr, NoiseEstimator, LOW_BER_THRESHOLD};
pub use stats::{ci95, mean_and_sample_std, student_t_cdf, student_t_inv_cdf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iq::Label;

/// Binary confusion counts. Positives are JAM images.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn tally(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Jam, Label::Jam) => self.tp += 1,
            (Label::NoJam, Label::NoJam) => self.tn += 1,
            (Label::NoJam, Label::Jam) => self.fp += 1,
            (Label::Jam, Label::NoJam) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// (TP + TN) / (TP + FP + TN + FN)
pub fn accuracy(c: &ConfusionCounts) -> Result<f64> {
    let total = c.total();
    if total == 0 {
        return Err(Error::Data("accuracy of an empty confusion matrix".into()));
    }
    Ok((c.tp + c.tn) as f64 / total as f64)
}
