//! k-nearest-neighbors classifier over Euclidean distance. Fitting just
//! stores the training set; `k` is clamped to the training size at query
//! time and distance ties are broken by training index.

use serde::{Deserialize, Serialize};

use super::TrainSet;
use crate::error::{Error, Result};

/// A stored-training-set k-NN model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    k: usize,
    feature_count: usize,
    class_count: usize,
}

impl KnnModel {
    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Neighbor-vote fraction per class over the `k` nearest neighbors.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut order: Vec<(f64, usize)> = self
            .features
            .iter()
            .enumerate()
            .map(|(i, train_row)| {
                let dist: f64 = train_row
                    .iter()
                    .zip(row)
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum();
                (dist, i)
            })
            .collect();
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let k = self.k.min(self.labels.len());
        let mut votes = vec![0usize; self.class_count];
        for &(_, i) in order.iter().take(k) {
            votes[self.labels[i]] += 1;
        }
        votes.iter().map(|&v| v as f64 / k as f64).collect()
    }
}

/// Stores the training set; no computation happens at fit. `k` may exceed
/// the training size (it is clamped at query time) but must be positive.
pub fn fit_knn(train: &TrainSet, k: usize) -> Result<KnnModel> {
    if k == 0 {
        return Err(Error::Parameter("k-NN requires k >= 1".into()));
    }
    Ok(KnnModel {
        features: train.features().to_vec(),
        labels: train.labels().to_vec(),
        k,
        feature_count: train.feature_count(),
        class_count: train.class_count(),
    })
}
