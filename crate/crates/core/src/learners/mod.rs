//! From-scratch implementations of the six trainable classifiers used as
//! stacking poolers, each with a fit operation and probability prediction
//! over dense real feature vectors.
//!
//! Fit operations are deterministic: the same training set and parameters
//! produce bit-identical models. Fitted models are immutable.

mod cnb;
mod gp;
mod knn;
mod linalg;
mod logreg;
mod svm;
mod tree;

pub use cnb::{fit_complement_nb, CnbModel};
pub use gp::{fit_gp_classifier, GpModel, GP_SIZE_GUARD};
pub use knn::{fit_knn, KnnModel};
pub use logreg::{fit_logistic_regression, LogRegModel};
pub use svm::{fit_svm, SmoSolution, SvmModel};
pub use tree::{fit_decision_tree, TreeModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense training data: an `N x F` feature matrix with one class index per
/// row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSet {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    class_count: usize,
    feature_count: usize,
}

impl TrainSet {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if features.len() < 2 {
            return Err(Error::ShapeMismatch(
                "training set needs at least 2 samples".into(),
            ));
        }
        let feature_count = features[0].len();
        if feature_count == 0 {
            return Err(Error::ShapeMismatch("feature rows are empty".into()));
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != feature_count {
                return Err(Error::ShapeMismatch(format!(
                    "feature row {i} has length {}, expected {feature_count}",
                    row.len()
                )));
            }
        }
        let mut seen = vec![false; class_count];
        for (&label, i) in labels.iter().zip(0..) {
            if label >= class_count {
                return Err(Error::ShapeMismatch(format!(
                    "label {label} at row {i} exceeds class count {class_count}"
                )));
            }
            seen[label] = true;
        }
        if seen.iter().filter(|&&s| s).count() < 2 {
            return Err(Error::DegenerateLabels(
                "training set needs at least 2 distinct labels".into(),
            ));
        }
        Ok(Self {
            features,
            labels,
            class_count,
            feature_count,
        })
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }
}

/// A fitted classifier, tagged by algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum LearnerModel {
    Tree(TreeModel),
    LogReg(LogRegModel),
    Cnb(CnbModel),
    Svm(SvmModel),
    Knn(KnnModel),
    Gp(GpModel),
}

impl LearnerModel {
    pub fn feature_count(&self) -> usize {
        match self {
            LearnerModel::Tree(m) => m.feature_count(),
            LearnerModel::LogReg(m) => m.feature_count(),
            LearnerModel::Cnb(m) => m.feature_count(),
            LearnerModel::Svm(m) => m.feature_count(),
            LearnerModel::Knn(m) => m.feature_count(),
            LearnerModel::Gp(m) => m.feature_count(),
        }
    }

    pub fn class_count(&self) -> usize {
        match self {
            LearnerModel::Tree(m) => m.class_count(),
            LearnerModel::LogReg(m) => m.class_count(),
            LearnerModel::Cnb(m) => m.class_count(),
            LearnerModel::Svm(m) => m.class_count(),
            LearnerModel::Knn(m) => m.class_count(),
            LearnerModel::Gp(m) => m.class_count(),
        }
    }
}

/// Class-probability rows for a feature matrix; every row sums to 1.
pub fn predict_proba(model: &LearnerModel, features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let feature_count = model.feature_count();
    for (i, row) in features.iter().enumerate() {
        if row.len() != feature_count {
            return Err(Error::ShapeMismatch(format!(
                "query row {i} has {} features, model expects {feature_count}",
                row.len()
            )));
        }
    }
    let rows = features
        .iter()
        .map(|row| match model {
            LearnerModel::Tree(m) => m.predict_proba(row),
            LearnerModel::LogReg(m) => m.predict_proba(row),
            LearnerModel::Cnb(m) => m.predict_proba(row),
            LearnerModel::Svm(m) => m.predict_proba(row),
            LearnerModel::Knn(m) => m.predict_proba(row),
            LearnerModel::Gp(m) => m.predict_proba(row),
        })
        .collect();
    Ok(rows)
}

/// Numerically stable softmax.
pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
