//! Dataset partitioning: the 65/10/10/15 percentage split, the 5-fold
//! cross-validation variant used for bagging, and class-weight computation.
//!
//! Rounding rule: per class, partition shares are floored and the leftover
//! samples go one at a time to the partitions with the largest fractional
//! remainders, ties broken in partition order (model-train, model-val,
//! ensemble-train, testing). This reproduces near-exact published partition
//! counts within one sample per class.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Assignment, ClassWeights, FoldRole, LabelVector, SplitAssignment};

/// Fractions for the four-way percentage split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub model_train: f64,
    pub model_val: f64,
    pub ensemble_train: f64,
    pub testing: f64,
}

impl SplitRatios {
    pub fn new(model_train: f64, model_val: f64, ensemble_train: f64, testing: f64) -> Result<Self> {
        let ratios = Self {
            model_train,
            model_val,
            ensemble_train,
            testing,
        };
        for r in ratios.as_array() {
            if !(0.0..1.0).contains(&r) || r == 0.0 {
                return Err(Error::Parameter(format!("ratio {r} outside (0, 1)")));
            }
        }
        let sum: f64 = ratios.as_array().iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!("ratios sum to {sum}, expected 1")));
        }
        Ok(ratios)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [
            self.model_train,
            self.model_val,
            self.ensemble_train,
            self.testing,
        ]
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            model_train: 0.65,
            model_val: 0.10,
            ensemble_train: 0.10,
            testing: 0.15,
        }
    }
}

/// Cross-validation layout: number of folds and shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KFoldSpec {
    pub k: usize,
    pub seed: u64,
}

impl KFoldSpec {
    pub fn new(k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::Parameter(format!("k-fold requires k >= 2, got {k}")));
        }
        Ok(Self { k, seed })
    }
}

impl Default for KFoldSpec {
    fn default() -> Self {
        Self { k: 5, seed: 0 }
    }
}

/// Floors `fractions * n` and hands the leftover to the largest fractional
/// remainders, ties broken by position.
pub(crate) fn largest_remainder_counts(n: usize, fractions: &[f64]) -> Vec<usize> {
    let shares: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    // Stable sort by descending remainder keeps ties in position order.
    order.sort_by(|&a, &b| {
        let ra = shares[a] - shares[a].floor();
        let rb = shares[b] - shares[b].floor();
        rb.partial_cmp(&ra).unwrap()
    });
    for i in 0..n.saturating_sub(assigned) {
        counts[order[i % order.len()]] += 1;
    }
    counts
}

const PARTITIONS: [Assignment; 4] = [
    Assignment::ModelTrain,
    Assignment::ModelVal,
    Assignment::EnsembleTrain,
    Assignment::Testing,
];

/// Partitions the dataset into model-train / model-val / ensemble-train /
/// testing. With `stratified` (the default protocol) every class is split
/// independently; shuffling is seeded and deterministic.
pub fn percentage_split(
    labels: &LabelVector,
    ratios: &SplitRatios,
    seed: u64,
    stratified: bool,
) -> Result<SplitAssignment> {
    let fractions = ratios.as_array();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut assignment = BTreeMap::new();

    let assign_group = |ids: &mut Vec<&String>, rng: &mut ChaCha20Rng,
                        assignment: &mut BTreeMap<String, Assignment>| {
        ids.shuffle(rng);
        let counts = largest_remainder_counts(ids.len(), &fractions);
        let mut cursor = 0usize;
        for (partition, count) in PARTITIONS.iter().zip(&counts) {
            for id in &ids[cursor..cursor + count] {
                assignment.insert((*id).clone(), *partition);
            }
            cursor += count;
        }
    };

    if stratified {
        let class_count = labels.class_count();
        for class in 0..class_count {
            let mut ids: Vec<&String> = labels
                .sample_ids()
                .iter()
                .zip(labels.labels())
                .filter(|&(_, &l)| l == class)
                .map(|(id, _)| id)
                .collect();
            if ids.len() < 4 {
                return Err(Error::TooFewSamples(format!(
                    "class {class} has {} samples; stratified splitting needs at least 4",
                    ids.len()
                )));
            }
            assign_group(&mut ids, &mut rng, &mut assignment);
        }
    } else {
        let mut ids: Vec<&String> = labels.sample_ids().iter().collect();
        assign_group(&mut ids, &mut rng, &mut assignment);
    }
    Ok(SplitAssignment::new(assignment))
}

/// Combines the model-train and model-val partitions of a four-way split
/// into a stratified k-fold pool. Output `i` marks fold `i` as validation
/// and the remaining folds as training; ensemble-train and testing
/// assignments are carried over unchanged.
pub fn kfold_split(
    labels: &LabelVector,
    base: &SplitAssignment,
    spec: &KFoldSpec,
) -> Result<Vec<SplitAssignment>> {
    if spec.k < 2 {
        return Err(Error::Parameter(format!(
            "k-fold requires k >= 2, got {}",
            spec.k
        )));
    }
    if !base.is_four_way() {
        return Err(Error::Config(
            "k-fold base must be a four-way split without fold assignments".into(),
        ));
    }
    let class_count = labels.class_count();
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);

    // fold_of: sample id -> fold index, stratified per class.
    let mut fold_of: BTreeMap<&String, usize> = BTreeMap::new();
    for class in 0..class_count {
        let mut ids: Vec<&String> = labels
            .sample_ids()
            .iter()
            .zip(labels.labels())
            .filter(|&(id, &l)| {
                l == class
                    && matches!(
                        base.get(id),
                        Some(Assignment::ModelTrain | Assignment::ModelVal)
                    )
            })
            .map(|(id, _)| id)
            .collect();
        if ids.len() < spec.k {
            return Err(Error::TooFewSamples(format!(
                "class {class} has {} cross-validation samples for k = {}",
                ids.len(),
                spec.k
            )));
        }
        ids.shuffle(&mut rng);
        let fractions = vec![1.0 / spec.k as f64; spec.k];
        let counts = largest_remainder_counts(ids.len(), &fractions);
        let mut cursor = 0usize;
        for (fold, count) in counts.iter().enumerate() {
            for id in &ids[cursor..cursor + count] {
                fold_of.insert(id, fold);
            }
            cursor += count;
        }
    }

    let mut outputs = Vec::with_capacity(spec.k);
    for val_fold in 0..spec.k {
        let mut assignment = BTreeMap::new();
        for (id, base_assignment) in base.iter() {
            let entry = match fold_of.get(id) {
                Some(&fold) => Assignment::Fold {
                    fold,
                    role: if fold == val_fold {
                        FoldRole::FoldVal
                    } else {
                        FoldRole::FoldTrain
                    },
                },
                None => base_assignment,
            };
            assignment.insert(id.clone(), entry);
        }
        outputs.push(SplitAssignment::new(assignment));
    }
    Ok(outputs)
}

/// Balanced inverse-frequency weights over the training partition:
/// `w_c = N_train / (C * n_c)`.
pub fn compute_class_weights(labels: &LabelVector, split: &SplitAssignment) -> Result<ClassWeights> {
    let class_count = labels.class_count();
    let mut counts = vec![0usize; class_count];
    let mut total = 0usize;
    for (id, &label) in labels.sample_ids().iter().zip(labels.labels()) {
        if split.get(id).is_some_and(Assignment::is_training) {
            counts[label] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::DegenerateSplit(
            "split has no training partition".into(),
        ));
    }
    let mut weights = Vec::with_capacity(class_count);
    for (class, &n_c) in counts.iter().enumerate() {
        if n_c == 0 {
            return Err(Error::EmptyClass { class });
        }
        weights.push(total as f64 / (class_count as f64 * n_c as f64));
    }
    ClassWeights::new(weights)
}
