//! The two detection heads: a sparse autoencoder with an MSE threshold
//! (anomaly detection, trained on no-jam images only) and a compact CNN
//! binary classifier. Training is single-threaded and deterministic per
//! seed; inference is pure.

pub mod ae;
pub mod cnn;
pub mod io;
pub mod nn;

pub use ae::{
    ae_batch_loss, ae_detect, ae_forward, ae_train, compute_threshold, AeForward, AeHyper, AeModel,
    AeThreshold, AeTrainResult, EpochStat,
};
pub use cnn::{
    cnn_batch_loss, cnn_detect, cnn_scores, cnn_train, CnnEpochStat, CnnHyper, CnnModel,
    CnnTrainResult,
};
pub use io::{ae_model_bytes, cnn_model_bytes, load_ae, load_cnn, save_ae, save_cnn};

use crate::iq::Label;

/// A detector decision. For the autoencoder the score is the
/// reconstruction MSE; for the CNN it is the jam-class probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub label: Label,
    pub score: f64,
}
