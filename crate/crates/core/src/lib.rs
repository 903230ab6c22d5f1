//! Combining ensembles of class-probability predictions.
//!
//! This crate provides the building blocks for ensemble-learning analysis
//! over per-sample softmax predictions:
//!
//! - [`types`]: the shared value types (probability rows, aligned
//!   prediction matrices, ensemble bundles, labels, split assignments).
//! - [`sampling`]: the four-way percentage split, the cross-validation
//!   variant used for bagging, and class-weight computation.
//! - [`poolers`]: twelve pooling functions behind one combiner interface,
//!   from unweighted averaging to trained meta-classifiers.
//! - [`learners`]: from-scratch classifiers backing the trainable poolers.
//! - [`metrics`]: confusion-based rates, top-k error, macro averaging, and
//!   ROC/AUC analysis.
//! - [`simulate`]: a desk-scale experiment engine that trains small softmax
//!   base learners and orchestrates baseline / augmenting / stacking /
//!   bagging comparisons.
//!
//! All value types are immutable after construction and safe to share
//! across threads.

pub mod error;
pub mod learners;
pub mod metrics;
pub mod poolers;
pub mod sampling;
pub mod simulate;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    renormalize, validate_bundle, Assignment, BundleMember, ClassProbabilities, ClassWeights,
    EnsembleBundle, FoldRole, LabelVector, PredictionMatrix, SourceKind, SplitAssignment,
};
