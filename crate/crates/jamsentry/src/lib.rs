//! Desk-scale weak-jamming detection for OFDM links.
//!
//! The pipeline: synthesize (or ingest) IQ samples of an OFDM link under
//! weak jamming, normalize and window them, turn each window into a
//! bi-variate-histogram grayscale image of the constellation plane, and
//! classify the images with either a sparse-autoencoder anomaly detector
//! (reconstruction-MSE threshold) or a compact CNN binary classifier.
//! An evaluation harness provides stratified K-fold accuracy with
//! Student-t confidence intervals, SNR degradation ratios, and overhead
//! measurements.
//!
//! See the `book/` directory for a guided tour; its code snippets are
//! compiled and run as doctests from this crate.

pub mod detectors;
pub mod error;
pub mod evalkit;
pub mod imaging;
pub mod iq;
pub mod linksim;

pub use error::{Error, Result};
