//! Domain types shared by all modules: per-sample class probabilities,
//! aligned prediction matrices, ensemble bundles, ground-truth labels,
//! split assignments, and class weights.
//!
//! All types are immutable values after construction and safe to share
//! across threads.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Internal normalization tolerance: rows must sum to 1 within this after
/// validation.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Ingestion tolerance: external files may carry rounded probabilities, so
/// rows within this of sum 1 are accepted and silently renormalized.
pub const INGEST_TOLERANCE: f64 = 1e-3;

const RANGE_SLACK: f64 = 1e-12;

/// A softmax-style probability vector over `C` classes.
///
/// Entries lie in `[0, 1]` and sum to 1 within [`INGEST_TOLERANCE`] at
/// construction; [`renormalize`] and [`validate_bundle`] tighten rows to
/// exact normalization. The one exception is Global Argmax output, which
/// keeps a single surviving probability and is flagged `degenerate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProbabilities {
    values: Vec<f64>,
    #[serde(default)]
    degenerate: bool,
}

impl ClassProbabilities {
    /// Builds a probability vector, enforcing the range and sum invariants.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidProbabilities("empty vector".into()));
        }
        let mut sum = 0.0;
        for &v in &values {
            if !v.is_finite() || v < -RANGE_SLACK || v > 1.0 + RANGE_SLACK {
                return Err(Error::InvalidProbabilities(format!(
                    "entry {v} outside [0, 1]"
                )));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > INGEST_TOLERANCE {
            return Err(Error::Normalization {
                context: "probability vector".into(),
                sum,
            });
        }
        Ok(Self {
            values,
            degenerate: false,
        })
    }

    /// Builds a degenerate vector: exactly one nonzero entry in `(0, 1]`.
    /// Used by the Global Argmax pooler, whose rows are deliberately not
    /// renormalized.
    pub fn new_degenerate(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidProbabilities("empty vector".into()));
        }
        let mut nonzero = 0usize;
        for &v in &values {
            if !v.is_finite() || v < 0.0 || v > 1.0 + RANGE_SLACK {
                return Err(Error::InvalidProbabilities(format!(
                    "entry {v} outside [0, 1]"
                )));
            }
            if v > 0.0 {
                nonzero += 1;
            }
        }
        if nonzero != 1 {
            return Err(Error::InvalidProbabilities(format!(
                "degenerate vector must have exactly one nonzero entry, got {nonzero}"
            )));
        }
        Ok(Self {
            values,
            degenerate: true,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn class_count(&self) -> usize {
        self.values.len()
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Index of the largest entry; ties go to the lowest class index.
    pub fn argmax(&self) -> usize {
        argmax_ties_low(&self.values)
    }
}

/// Largest-entry index with ties broken toward the lowest index.
pub(crate) fn argmax_ties_low(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Rescales a non-negative vector so its entries sum to 1 (within 1e-12).
///
/// Fails with [`Error::Degenerate`] when all entries are zero.
pub fn renormalize(values: &[f64]) -> Result<ClassProbabilities> {
    if values.is_empty() {
        return Err(Error::InvalidProbabilities("empty vector".into()));
    }
    let mut sum = 0.0;
    for &v in values {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidProbabilities(format!(
                "entry {v} is negative or non-finite"
            )));
        }
        sum += v;
    }
    if sum <= 0.0 {
        return Err(Error::Degenerate);
    }
    let scaled: Vec<f64> = values.iter().map(|v| v / sum).collect();
    Ok(ClassProbabilities {
        values: scaled,
        degenerate: false,
    })
}

/// Ordered per-sample predictions: one probability row per sample id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionMatrix {
    sample_ids: Vec<String>,
    rows: Vec<ClassProbabilities>,
    class_count: usize,
}

impl PredictionMatrix {
    pub fn new(sample_ids: Vec<String>, rows: Vec<ClassProbabilities>) -> Result<Self> {
        if sample_ids.len() != rows.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} sample ids but {} rows",
                sample_ids.len(),
                rows.len()
            )));
        }
        if rows.is_empty() {
            return Err(Error::ShapeMismatch("prediction matrix is empty".into()));
        }
        let class_count = rows[0].class_count();
        for (i, row) in rows.iter().enumerate() {
            if row.class_count() != class_count {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} classes, expected {class_count}",
                    row.class_count()
                )));
            }
        }
        let mut seen = HashSet::with_capacity(sample_ids.len());
        for id in &sample_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Alignment(format!("duplicate sample id `{id}`")));
            }
        }
        Ok(Self {
            sample_ids,
            rows,
            class_count,
        })
    }

    /// Ingestion path: raw rows are accepted when they sum to 1 within
    /// [`INGEST_TOLERANCE`] and silently renormalized.
    pub fn from_raw(sample_ids: Vec<String>, raw_rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut rows = Vec::with_capacity(raw_rows.len());
        for (i, raw) in raw_rows.into_iter().enumerate() {
            let sum: f64 = raw.iter().sum();
            if !sum.is_finite() || (sum - 1.0).abs() > INGEST_TOLERANCE {
                return Err(Error::Normalization {
                    context: format!("row {i}"),
                    sum,
                });
            }
            rows.push(renormalize(&raw)?);
        }
        Self::new(sample_ids, rows)
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn rows(&self) -> &[ClassProbabilities] {
        &self.rows
    }

    pub fn row(&self, index: usize) -> &ClassProbabilities {
        &self.rows[index]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Argmax class per row, ties toward the lowest class index.
    pub fn argmax_classes(&self) -> Vec<usize> {
        self.rows.iter().map(ClassProbabilities::argmax).collect()
    }

    /// Restricts the matrix to the given sample ids, in the given order.
    pub fn select(&self, ids: &[String]) -> Result<Self> {
        let index: BTreeMap<&str, usize> = self
            .sample_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut rows = Vec::with_capacity(ids.len());
        for id in ids {
            let &i = index
                .get(id.as_str())
                .ok_or_else(|| Error::Alignment(format!("sample id `{id}` not found")))?;
            rows.push(self.rows[i].clone());
        }
        Self::new(ids.to_vec(), rows)
    }
}

/// Where a bundle member's predictions came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Architecture,
    Fold,
    AugmentedCopy,
}

/// One member of an ensemble: a named prediction matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMember {
    pub name: String,
    pub source_kind: SourceKind,
    pub matrix: PredictionMatrix,
}

/// `M` aligned prediction matrices over the same samples and classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleBundle {
    members: Vec<BundleMember>,
}

impl EnsembleBundle {
    pub fn new(members: Vec<BundleMember>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Alignment("bundle needs at least one member".into()));
        }
        let first = &members[0];
        for member in &members[1..] {
            if member.matrix.class_count() != first.matrix.class_count() {
                return Err(Error::Alignment(format!(
                    "member `{}` has {} classes, member `{}` has {}",
                    member.name,
                    member.matrix.class_count(),
                    first.name,
                    first.matrix.class_count()
                )));
            }
            if member.matrix.sample_ids() != first.matrix.sample_ids() {
                return Err(Error::Alignment(format!(
                    "member `{}` sample ids differ from member `{}` (same ids in the same order required)",
                    member.name, first.name
                )));
            }
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[BundleMember] {
        &self.members
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn class_count(&self) -> usize {
        self.members[0].matrix.class_count()
    }

    pub fn sample_ids(&self) -> &[String] {
        self.members[0].matrix.sample_ids()
    }

    /// Number of samples shared by all members.
    pub fn len(&self) -> usize {
        self.members[0].matrix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members[0].matrix.is_empty()
    }

    /// Restricts every member to the given sample ids, in the given order.
    pub fn select(&self, ids: &[String]) -> Result<Self> {
        let members = self
            .members
            .iter()
            .map(|m| {
                Ok(BundleMember {
                    name: m.name.clone(),
                    source_kind: m.source_kind,
                    matrix: m.matrix.select(ids)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(members)
    }
}

/// Checks member alignment and row normalization, renormalizing rows that
/// are off by at most [`INGEST_TOLERANCE`]; when labels are given their
/// sample ids must equal the bundle's. Idempotent.
pub fn validate_bundle(
    bundle: &EnsembleBundle,
    labels: Option<&LabelVector>,
) -> Result<EnsembleBundle> {
    // Alignment is re-checked here because bundles can arrive through
    // deserialization, which bypasses the constructor.
    let mut members = Vec::with_capacity(bundle.members.len());
    let first = &bundle.members[0];
    for member in &bundle.members {
        if member.matrix.sample_ids() != first.matrix.sample_ids()
            || member.matrix.class_count() != first.matrix.class_count()
        {
            return Err(Error::Alignment(format!(
                "member `{}` is not aligned with member `{}`",
                member.name, first.name
            )));
        }
        let mut rows = Vec::with_capacity(member.matrix.len());
        for (i, row) in member.matrix.rows().iter().enumerate() {
            if row.is_degenerate() {
                rows.push(row.clone());
                continue;
            }
            let sum: f64 = row.values().iter().sum();
            if !sum.is_finite() || (sum - 1.0).abs() > INGEST_TOLERANCE {
                return Err(Error::Normalization {
                    context: format!(
                        "member `{}`, sample `{}`",
                        member.name,
                        member.matrix.sample_ids()[i]
                    ),
                    sum,
                });
            }
            if (sum - 1.0).abs() > 1e-12 {
                rows.push(renormalize(row.values())?);
            } else {
                rows.push(row.clone());
            }
        }
        members.push(BundleMember {
            name: member.name.clone(),
            source_kind: member.source_kind,
            matrix: PredictionMatrix::new(member.matrix.sample_ids().to_vec(), rows)?,
        });
    }
    let validated = EnsembleBundle::new(members)?;
    if let Some(labels) = labels {
        if labels.sample_ids() != validated.sample_ids() {
            return Err(Error::LabelMismatch(
                "label sample ids differ from bundle sample ids".into(),
            ));
        }
    }
    Ok(validated)
}

/// Ground-truth class indices for an ordered list of samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    sample_ids: Vec<String>,
    labels: Vec<usize>,
}

impl LabelVector {
    pub fn new(sample_ids: Vec<String>, labels: Vec<usize>) -> Result<Self> {
        if sample_ids.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} sample ids but {} labels",
                sample_ids.len(),
                labels.len()
            )));
        }
        if sample_ids.is_empty() {
            return Err(Error::ShapeMismatch("label vector is empty".into()));
        }
        let mut seen = HashSet::with_capacity(sample_ids.len());
        for id in &sample_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Alignment(format!("duplicate sample id `{id}`")));
            }
        }
        Ok(Self { sample_ids, labels })
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
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

    /// Number of classes implied by the labels: `max + 1`.
    pub fn class_count(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Restricts the labels to the given sample ids, in the given order.
    pub fn select(&self, ids: &[String]) -> Result<Self> {
        let index: BTreeMap<&str, usize> = self
            .sample_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut labels = Vec::with_capacity(ids.len());
        for id in ids {
            let &i = index
                .get(id.as_str())
                .ok_or_else(|| Error::Alignment(format!("sample id `{id}` not found")))?;
            labels.push(self.labels[i]);
        }
        Self::new(ids.to_vec(), labels)
    }
}

/// Role of a sample inside one cross-validation assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FoldRole {
    FoldTrain,
    FoldVal,
}

/// Where a sample lands: one of the four percentage partitions, or a fold
/// membership in the cross-validation variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Assignment {
    ModelTrain,
    ModelVal,
    EnsembleTrain,
    Testing,
    Fold { fold: usize, role: FoldRole },
}

impl Assignment {
    /// True for the partitions a base model trains on.
    pub fn is_training(self) -> bool {
        matches!(
            self,
            Assignment::ModelTrain
                | Assignment::Fold {
                    role: FoldRole::FoldTrain,
                    ..
                }
        )
    }

    /// True for the partitions monitored during training.
    pub fn is_validation(self) -> bool {
        matches!(
            self,
            Assignment::ModelVal
                | Assignment::Fold {
                    role: FoldRole::FoldVal,
                    ..
                }
        )
    }
}

/// Maps every sample of a dataset to exactly one [`Assignment`].
///
/// Backed by a sorted map so iteration and serialization order are
/// deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    assignment: BTreeMap<String, Assignment>,
}

impl SplitAssignment {
    pub fn new(assignment: BTreeMap<String, Assignment>) -> Self {
        Self { assignment }
    }

    pub fn get(&self, sample_id: &str) -> Option<Assignment> {
        self.assignment.get(sample_id).copied()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, Assignment)> {
        self.assignment.iter().map(|(id, &a)| (id, a))
    }

    /// Sample ids matching a predicate, in `labels` order.
    ///
    /// Ordering by the label vector (rather than by the map) keeps
    /// downstream feature matrices in dataset order.
    pub fn ids_where(&self, labels: &LabelVector, pred: impl Fn(Assignment) -> bool) -> Vec<String> {
        labels
            .sample_ids()
            .iter()
            .filter(|id| self.get(id).is_some_and(&pred))
            .cloned()
            .collect()
    }

    /// True when no sample carries a fold assignment.
    pub fn is_four_way(&self) -> bool {
        !self
            .assignment
            .values()
            .any(|a| matches!(a, Assignment::Fold { .. }))
    }

    /// Counts per four-way partition (model-train, model-val,
    /// ensemble-train, testing).
    pub fn partition_counts(&self) -> [usize; 4] {
        let mut counts = [0usize; 4];
        for a in self.assignment.values() {
            match a {
                Assignment::ModelTrain => counts[0] += 1,
                Assignment::ModelVal => counts[1] += 1,
                Assignment::EnsembleTrain => counts[2] += 1,
                Assignment::Testing => counts[3] += 1,
                Assignment::Fold { .. } => {}
            }
        }
        counts
    }
}

/// Per-class loss weights (the focal-loss alpha vector); all positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    weights: Vec<f64>,
}

impl ClassWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Parameter("class weights are empty".into()));
        }
        for &w in &weights {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::Parameter(format!(
                    "class weight {w} is not positive"
                )));
            }
        }
        Ok(Self { weights })
    }

    /// Uniform weights of 1 for `class_count` classes.
    pub fn uniform(class_count: usize) -> Self {
        Self {
            weights: vec![1.0; class_count.max(1)],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, class: usize) -> f64 {
        self.weights[class]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
