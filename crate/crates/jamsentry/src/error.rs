//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the jamsentry pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed file contents (fc16 framing, model containers, sidecars, presets).
    #[error("format error: {0}")]
    Format(String),

    /// An input that must be non-empty was empty.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// An argument violates an operation's contract.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Dataset-level problems: too few items, missing classes, unbalanced sets.
    #[error("data error: {0}")]
    Data(String),

    /// Tensor / image dimension mismatch.
    #[error("shape error: {0}")]
    Shape(String),

    /// Normalization statistics would be zero for a component.
    #[error("degenerate normalization: {0}")]
    DegenerateNormalization(String),

    /// A model was used before it was fitted.
    #[error("state error: {0}")]
    UnfittedModel(String),

    /// A scenario failed the weak-jamming admissibility check.
    #[error(
        "scenario rejected: weak-regime violation (ser_jam={ser_jam:.5}, ser_nojam={ser_nojam:.5}, gap>{limit})"
    )]
    ScenarioRejected {
        ser_jam: f64,
        ser_nojam: f64,
        limit: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
