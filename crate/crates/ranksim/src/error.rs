//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any operation in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation that requires at least one element received none.
    #[error("empty vector")]
    EmptyVector,

    /// An input contained NaN or infinity where finite values are required.
    #[error("non-finite input in {context}")]
    NonFinite {
        /// What the offending value was part of.
        context: &'static str,
    },

    /// Incoming gradient length does not match the primal vector length.
    #[error("gradient shape mismatch: vector has length {expected}, gradient has length {actual}")]
    GradientShapeMismatch {
        expected: usize,
        actual: usize,
    },

    /// Two sequences that must agree in length do not.
    #[error("length mismatch in {context}: {left} vs {right}")]
    LengthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    /// A zero-norm vector was passed to a similarity that divides by the norm.
    #[error("degenerate vector: zero norm under {kind}")]
    DegenerateVector {
        kind: &'static str,
    },

    /// A pairwise matrix entry failed to evaluate; indices identify the pair.
    #[error("pairwise similarity failed at ({i}, {j}): {source}")]
    PairEvaluation {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    /// Correlation is undefined because one side has zero variance.
    #[error("degenerate correlation: zero variance")]
    DegenerateCorrelation,

    /// A re-weighting scheme queried a bin with zero effective density.
    #[error("empty bin weight: bin {bin} has zero effective density")]
    EmptyBinWeight {
        bin: usize,
    },

    /// Training produced a non-finite loss or gradient.
    #[error("diverged: {0}")]
    Diverged(String),

    /// A configuration value violates its documented constraints.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Batch or tensor dimensions are inconsistent with the model.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// File or format problems while reading/writing artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// CSV (de)serialization failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
