//! Complement naive Bayes (Rennie et al.): per-class weights are estimated
//! from the *complement* of each class and weight-normalized; the predicted
//! class minimizes the complement score.

use serde::{Deserialize, Serialize};

use super::{softmax, TrainSet};
use crate::error::{Error, Result};

/// A fitted complement naive Bayes model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnbModel {
    /// Row-major `C x F` normalized complement log-weights.
    weights: Vec<f64>,
    feature_count: usize,
    class_count: usize,
}

impl CnbModel {
    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Complement score per class: `sum_i x_i * w_ci`. Lower is better.
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        (0..self.class_count)
            .map(|c| {
                let w = &self.weights[c * self.feature_count..(c + 1) * self.feature_count];
                w.iter().zip(row).map(|(&wi, &xi)| wi * xi).sum()
            })
            .collect()
    }

    /// Argmin of the complement scores, ties toward the lowest class index.
    pub fn predict(&self, row: &[f64]) -> usize {
        let scores = self.scores(row);
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate().skip(1) {
            if s < scores[best] {
                best = c;
            }
        }
        best
    }

    /// Softmax over negated complement scores.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let negated: Vec<f64> = self.scores(row).iter().map(|&s| -s).collect();
        softmax(&negated)
    }
}

/// Fits complement naive Bayes with smoothing `alpha`. Features must be
/// non-negative.
pub fn fit_complement_nb(train: &TrainSet, alpha: f64) -> Result<CnbModel> {
    for (r, row) in train.features().iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            if v < 0.0 {
                return Err(Error::NegativeFeature {
                    row: r,
                    column: c,
                    value: v,
                });
            }
        }
    }
    let class_count = train.class_count();
    let feature_count = train.feature_count();

    // Complement sums: for class c, accumulate over samples NOT labeled c.
    let mut weights = vec![0.0; class_count * feature_count];
    for class in 0..class_count {
        let mut feature_sums = vec![0.0; feature_count];
        let mut total = 0.0;
        for (row, &label) in train.features().iter().zip(train.labels()) {
            if label == class {
                continue;
            }
            for (s, &x) in feature_sums.iter_mut().zip(row) {
                *s += x;
                total += x;
            }
        }
        let denominator = alpha * feature_count as f64 + total;
        let w = &mut weights[class * feature_count..(class + 1) * feature_count];
        for (wi, &s) in w.iter_mut().zip(&feature_sums) {
            *wi = ((alpha + s) / denominator).ln();
        }
        let norm: f64 = w.iter().map(|wi| wi.abs()).sum();
        if norm > 0.0 {
            for wi in w.iter_mut() {
                *wi /= norm;
            }
        }
    }
    Ok(CnbModel {
        weights,
        feature_count,
        class_count,
    })
}
