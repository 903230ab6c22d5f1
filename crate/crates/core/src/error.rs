//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by validation, sampling, pooling, learning, and metrics.
#[derive(Debug, Error)]
pub enum Error {
    /// Bundle members disagree on sample ids, id order, or class count.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// A probability row deviates from sum 1 beyond the ingestion tolerance.
    #[error("normalization error: {context}: row sums to {sum}")]
    Normalization { context: String, sum: f64 },

    /// Label sample ids do not match the prediction sample ids.
    #[error("label mismatch: {0}")]
    LabelMismatch(String),

    /// A probability vector with no mass cannot be renormalized.
    #[error("degenerate probability vector: all entries are zero")]
    Degenerate,

    /// A probability vector violates the basic range/shape rules.
    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),

    /// Not enough samples to honor the requested partitioning.
    #[error("too few samples: {0}")]
    TooFewSamples(String),

    /// A class is absent from the training partition.
    #[error("class {class} is absent from the training partition")]
    EmptyClass { class: usize },

    /// Fewer than two distinct labels where a classifier must be trained.
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    /// Input dimensions do not match what a model or pooler was built for.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Member weight vector has the wrong length or invalid values.
    #[error("weight shape error: {0}")]
    WeightShape(String),

    /// A feature value is negative where non-negative input is required.
    #[error("negative feature {value} at row {row}, column {column}")]
    NegativeFeature {
        row: usize,
        column: usize,
        value: f64,
    },

    /// Input exceeds a hard size guard (dense kernel algebra).
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    /// ROC analysis needs at least one positive and one negative sample.
    #[error("one-class input: ROC/AUC needs both positive and negative samples")]
    OneClass,

    /// A split lacks the partitions an operation requires.
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    /// An operation parameter is out of range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An experiment or scenario configuration is inconsistent.
    #[error("invalid config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
