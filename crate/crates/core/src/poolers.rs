//! The twelve pooling functions behind a single combiner interface.
//!
//! Static poolers (unweighted mean, both majority votes, global argmax)
//! need no fitting. Fitted poolers train on the ensemble-train partition:
//! Best Model and Weighted Mean score members by macro-F1, and the six
//! trainable kinds stack a classifier from [`crate::learners`] on the
//! concatenated member probabilities (member-major feature layout: member
//! 0's classes first, then member 1's, and so on).
//!
//! Tie-breaks are always toward the lowest class index, then the lowest
//! member index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{
    self, fit_complement_nb, fit_decision_tree, fit_gp_classifier, fit_knn,
    fit_logistic_regression, fit_svm, LearnerModel, TrainSet,
};
use crate::metrics::macro_f1;
use crate::types::{
    argmax_ties_low, renormalize, validate_bundle, ClassProbabilities, EnsembleBundle,
    LabelVector, PredictionMatrix,
};

/// The pooling functions under analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolerKind {
    BestModel,
    DecisionTree,
    GaussianProcess,
    GlobalArgmax,
    LogisticRegression,
    MajorityVoteHard,
    MajorityVoteSoft,
    MeanUnweighted,
    MeanWeighted,
    NaiveBayesComplement,
    SupportVectorMachine,
    KNearestNeighbors,
}

impl PoolerKind {
    pub const ALL: [PoolerKind; 12] = [
        PoolerKind::BestModel,
        PoolerKind::DecisionTree,
        PoolerKind::GaussianProcess,
        PoolerKind::GlobalArgmax,
        PoolerKind::LogisticRegression,
        PoolerKind::MajorityVoteHard,
        PoolerKind::MajorityVoteSoft,
        PoolerKind::MeanUnweighted,
        PoolerKind::MeanWeighted,
        PoolerKind::NaiveBayesComplement,
        PoolerKind::SupportVectorMachine,
        PoolerKind::KNearestNeighbors,
    ];

    /// Static kinds carry no state and accept any member count at pool
    /// time.
    pub fn is_static(self) -> bool {
        matches!(
            self,
            PoolerKind::GlobalArgmax
                | PoolerKind::MajorityVoteHard
                | PoolerKind::MajorityVoteSoft
                | PoolerKind::MeanUnweighted
        )
    }

    /// Kinds that stack a trained classifier on the member probabilities.
    pub fn is_trainable(self) -> bool {
        matches!(
            self,
            PoolerKind::DecisionTree
                | PoolerKind::GaussianProcess
                | PoolerKind::LogisticRegression
                | PoolerKind::NaiveBayesComplement
                | PoolerKind::SupportVectorMachine
                | PoolerKind::KNearestNeighbors
        )
    }

    /// Kinds that need the ensemble-train partition before pooling.
    pub fn needs_fitting(self) -> bool {
        !self.is_static()
    }

    pub fn name(self) -> &'static str {
        match self {
            PoolerKind::BestModel => "best-model",
            PoolerKind::DecisionTree => "decision-tree",
            PoolerKind::GaussianProcess => "gaussian-process",
            PoolerKind::GlobalArgmax => "global-argmax",
            PoolerKind::LogisticRegression => "logistic-regression",
            PoolerKind::MajorityVoteHard => "majority-vote-hard",
            PoolerKind::MajorityVoteSoft => "majority-vote-soft",
            PoolerKind::MeanUnweighted => "mean-unweighted",
            PoolerKind::MeanWeighted => "mean-weighted",
            PoolerKind::NaiveBayesComplement => "naive-bayes-complement",
            PoolerKind::SupportVectorMachine => "support-vector-machine",
            PoolerKind::KNearestNeighbors => "k-nearest-neighbors",
        }
    }
}

impl std::fmt::Display for PoolerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PoolerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PoolerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown pooler kind `{s}`")))
    }
}

/// State carried by a fitted pooler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum PoolerState {
    Stateless,
    /// Per-member weights, non-negative, summing to 1.
    MemberWeights { weights: Vec<f64> },
    /// Index of the best-scoring member.
    BestIndex { index: usize },
    /// A stacked classifier over the concatenated member probabilities.
    Learner { model: Box<LearnerModel> },
}

/// A pooling function ready to combine bundles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPooler {
    pub kind: PoolerKind,
    pub member_count: usize,
    pub class_count: usize,
    #[serde(flatten)]
    pub state: PoolerState,
}

/// Concatenates the member probability rows into `N x (M * C)` feature
/// vectors, member-major.
pub fn stacked_features(bundle: &EnsembleBundle) -> Vec<Vec<f64>> {
    let n = bundle.len();
    let width = bundle.member_count() * bundle.class_count();
    let mut rows = vec![Vec::with_capacity(width); n];
    for member in bundle.members() {
        for (row, probs) in rows.iter_mut().zip(member.matrix.rows()) {
            row.extend_from_slice(probs.values());
        }
    }
    rows
}

/// Per-member macro-F1 against the given labels.
fn member_scores(bundle: &EnsembleBundle, labels: &LabelVector) -> Result<Vec<f64>> {
    bundle
        .members()
        .iter()
        .map(|m| macro_f1(&m.matrix, labels))
        .collect()
}

/// Fits a pooler of the given kind on an ensemble-train bundle.
///
/// Static kinds return a stateless pooler immediately. Best Model stores
/// the index of the member with the highest macro-F1 (ties to the lowest
/// index); Weighted Mean stores the members' macro-F1 scores normalized to
/// sum 1, falling back to uniform weights when every score is zero.
/// Trainable kinds delegate to the learners module with their documented
/// defaults.
pub fn fit_pooler(
    kind: PoolerKind,
    bundle: &EnsembleBundle,
    labels: &LabelVector,
) -> Result<FittedPooler> {
    let bundle = validate_bundle(bundle, Some(labels))?;
    let member_count = bundle.member_count();
    let class_count = bundle.class_count();
    let state = match kind {
        _ if kind.is_static() => PoolerState::Stateless,
        PoolerKind::BestModel => {
            let scores = member_scores(&bundle, labels)?;
            PoolerState::BestIndex {
                index: argmax_ties_low(&scores),
            }
        }
        PoolerKind::MeanWeighted => {
            let scores = member_scores(&bundle, labels)?;
            let total: f64 = scores.iter().sum();
            let weights = if total > 0.0 {
                scores.iter().map(|s| s / total).collect()
            } else {
                // Every member scored zero F1; uniform weights keep the
                // pooler usable.
                vec![1.0 / member_count as f64; member_count]
            };
            PoolerState::MemberWeights { weights }
        }
        trainable => {
            let features = stacked_features(&bundle);
            let train = TrainSet::new(features, labels.labels().to_vec(), class_count)?;
            let feature_count = train.feature_count();
            let model = match trainable {
                PoolerKind::DecisionTree => LearnerModel::Tree(fit_decision_tree(&train, None)),
                PoolerKind::LogisticRegression => {
                    LearnerModel::LogReg(fit_logistic_regression(&train, 1.0, 1e-6, 100))
                }
                PoolerKind::NaiveBayesComplement => {
                    LearnerModel::Cnb(fit_complement_nb(&train, 1.0)?)
                }
                PoolerKind::SupportVectorMachine => LearnerModel::Svm(fit_svm(&train, 1.0, None)),
                PoolerKind::KNearestNeighbors => LearnerModel::Knn(fit_knn(&train, 5)?),
                PoolerKind::GaussianProcess => LearnerModel::Gp(fit_gp_classifier(&train, 1.0)?),
                _ => unreachable!("static and scored kinds handled above"),
            };
            debug_assert_eq!(feature_count, member_count * class_count);
            PoolerState::Learner {
                model: Box::new(model),
            }
        }
    };
    Ok(FittedPooler {
        kind,
        member_count,
        class_count,
        state,
    })
}

/// Applies a fitted pooler to a bundle; one output row per sample.
pub fn pool(pooler: &FittedPooler, bundle: &EnsembleBundle) -> Result<PredictionMatrix> {
    let bundle = validate_bundle(bundle, None)?;
    if bundle.class_count() != pooler.class_count {
        return Err(Error::ShapeMismatch(format!(
            "bundle has {} classes, pooler was fitted for {}",
            bundle.class_count(),
            pooler.class_count
        )));
    }
    if !pooler.kind.is_static() && bundle.member_count() != pooler.member_count {
        return Err(Error::ShapeMismatch(format!(
            "bundle has {} members, pooler was fitted for {}",
            bundle.member_count(),
            pooler.member_count
        )));
    }
    match (&pooler.state, pooler.kind) {
        (PoolerState::Stateless, PoolerKind::MeanUnweighted) => pool_mean_unweighted(&bundle),
        (PoolerState::Stateless, PoolerKind::MajorityVoteHard) => {
            pool_majority_vote_hard(&bundle)
        }
        (PoolerState::Stateless, PoolerKind::MajorityVoteSoft) => {
            pool_majority_vote_soft(&bundle)
        }
        (PoolerState::Stateless, PoolerKind::GlobalArgmax) => pool_global_argmax(&bundle),
        (PoolerState::MemberWeights { weights }, _) => pool_mean_weighted(&bundle, weights),
        (PoolerState::BestIndex { index }, _) => Ok(bundle.members()[*index].matrix.clone()),
        (PoolerState::Learner { model }, _) => pool_trained(model, &bundle),
        (state, kind) => Err(Error::ShapeMismatch(format!(
            "pooler state {state:?} does not match kind {kind}"
        ))),
    }
}

fn matrix_from_rows(
    bundle: &EnsembleBundle,
    rows: Vec<ClassProbabilities>,
) -> Result<PredictionMatrix> {
    PredictionMatrix::new(bundle.sample_ids().to_vec(), rows)
}

/// `row_s = (1/M) sum_m member_m.row_s`.
pub fn pool_mean_unweighted(bundle: &EnsembleBundle) -> Result<PredictionMatrix> {
    let m = bundle.member_count() as f64;
    let weights = vec![1.0 / m; bundle.member_count()];
    pool_mean_weighted_unchecked(bundle, &weights)
}

/// `row_s = sum_m w_m member_m.row_s` with normalized non-negative weights.
pub fn pool_mean_weighted(bundle: &EnsembleBundle, weights: &[f64]) -> Result<PredictionMatrix> {
    if weights.len() != bundle.member_count() {
        return Err(Error::WeightShape(format!(
            "{} weights for {} members",
            weights.len(),
            bundle.member_count()
        )));
    }
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::WeightShape("weights must be non-negative".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::WeightShape(format!("weights sum to {sum}, expected 1")));
    }
    pool_mean_weighted_unchecked(bundle, weights)
}

fn pool_mean_weighted_unchecked(
    bundle: &EnsembleBundle,
    weights: &[f64],
) -> Result<PredictionMatrix> {
    let class_count = bundle.class_count();
    let members = bundle.members();
    let mut rows = Vec::with_capacity(bundle.len());
    for s in 0..bundle.len() {
        let first = members[0].matrix.row(s);
        // The mean of identical rows is exactly that row; taking it
        // directly avoids float drift (weights sum to 1).
        if members[1..]
            .iter()
            .all(|m| m.matrix.row(s).values() == first.values())
        {
            rows.push(first.clone());
            continue;
        }
        let mut acc = vec![0.0; class_count];
        for (member, &w) in members.iter().zip(weights) {
            for (a, &p) in acc.iter_mut().zip(member.matrix.row(s).values()) {
                *a += w * p;
            }
        }
        rows.push(ClassProbabilities::new(acc)?);
    }
    matrix_from_rows(bundle, rows)
}

/// Each member votes for its argmax class; the output row is a one-hot of
/// the class with the most votes. All ties go to the lowest class index.
pub fn pool_majority_vote_hard(bundle: &EnsembleBundle) -> Result<PredictionMatrix> {
    let class_count = bundle.class_count();
    let mut rows = Vec::with_capacity(bundle.len());
    for s in 0..bundle.len() {
        let mut votes = vec![0usize; class_count];
        for member in bundle.members() {
            votes[member.matrix.row(s).argmax()] += 1;
        }
        let winner = argmax_ties_low(&votes.iter().map(|&v| v as f64).collect::<Vec<_>>());
        let mut row = vec![0.0; class_count];
        row[winner] = 1.0;
        rows.push(ClassProbabilities::new(row)?);
    }
    matrix_from_rows(bundle, rows)
}

/// Sums the probabilities per class across members and softmax-normalizes
/// the raw sums (the sums act as logits).
pub fn pool_majority_vote_soft(bundle: &EnsembleBundle) -> Result<PredictionMatrix> {
    let class_count = bundle.class_count();
    let mut rows = Vec::with_capacity(bundle.len());
    for s in 0..bundle.len() {
        let mut sums = vec![0.0; class_count];
        for member in bundle.members() {
            for (acc, &p) in sums.iter_mut().zip(member.matrix.row(s).values()) {
                *acc += p;
            }
        }
        let max = sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = sums.iter().map(|&v| (v - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        rows.push(ClassProbabilities::new(
            exps.into_iter().map(|e| e / total).collect(),
        )?);
    }
    matrix_from_rows(bundle, rows)
}

/// Keeps the single highest probability across all members and classes and
/// zeroes the rest. Rows are flagged degenerate and deliberately not
/// renormalized. Ties go to the lowest class index, then the lowest member
/// index.
pub fn pool_global_argmax(bundle: &EnsembleBundle) -> Result<PredictionMatrix> {
    let class_count = bundle.class_count();
    let mut rows = Vec::with_capacity(bundle.len());
    for s in 0..bundle.len() {
        let mut best_class = 0usize;
        let mut best_value = f64::NEG_INFINITY;
        for class in 0..class_count {
            for member in bundle.members() {
                let v = member.matrix.row(s).values()[class];
                if v > best_value {
                    best_value = v;
                    best_class = class;
                }
            }
        }
        let mut row = vec![0.0; class_count];
        row[best_class] = best_value;
        rows.push(ClassProbabilities::new_degenerate(row)?);
    }
    matrix_from_rows(bundle, rows)
}

/// Runs a stacked learner over the concatenated member probabilities and
/// renormalizes its rows.
pub fn pool_trained(model: &LearnerModel, bundle: &EnsembleBundle) -> Result<PredictionMatrix> {
    let expected = bundle.member_count() * bundle.class_count();
    if model.feature_count() != expected {
        return Err(Error::ShapeMismatch(format!(
            "learner expects {} features, bundle provides {expected}",
            model.feature_count()
        )));
    }
    let features = stacked_features(bundle);
    let raw = learners::predict_proba(model, &features)?;
    let rows = raw
        .iter()
        .map(|row| renormalize(row))
        .collect::<Result<Vec<_>>>()?;
    matrix_from_rows(bundle, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{BundleMember, SourceKind};

    fn matrix(ids: &[&str], rows: &[&[f64]]) -> PredictionMatrix {
        PredictionMatrix::new(
            ids.iter().map(|s| s.to_string()).collect(),
            rows.iter()
                .map(|r| ClassProbabilities::new(r.to_vec()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn bundle(matrices: Vec<PredictionMatrix>) -> EnsembleBundle {
        EnsembleBundle::new(
            matrices
                .into_iter()
                .enumerate()
                .map(|(i, m)| BundleMember {
                    name: format!("m{i}"),
                    source_kind: SourceKind::Architecture,
                    matrix: m,
                })
                .collect(),
        )
        .unwrap()
    }

    fn labels(ids: &[&str], values: &[usize]) -> LabelVector {
        LabelVector::new(ids.iter().map(|s| s.to_string()).collect(), values.to_vec()).unwrap()
    }

    #[test]
    fn mean_unweighted_averages_rows() {
        let b = bundle(vec![
            matrix(&["a"], &[&[0.6, 0.4]]),
            matrix(&["a"], &[&[0.8, 0.2]]),
        ]);
        let out = pool_mean_unweighted(&b).unwrap();
        let row = out.row(0).values();
        assert!((row[0] - 0.7).abs() < 1e-15);
        assert!((row[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn mean_unweighted_identity_on_duplicates() {
        let m = matrix(&["a", "b"], &[&[0.25, 0.75], &[0.9, 0.1]]);
        let b = bundle(vec![m.clone(), m.clone(), m.clone()]);
        let out = pool_mean_unweighted(&b).unwrap();
        for (got, want) in out.rows().iter().zip(m.rows()) {
            for (g, w) in got.values().iter().zip(want.values()) {
                assert!((g - w).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mean_unweighted_symmetry() {
        let b = bundle(vec![
            matrix(&["a"], &[&[1.0, 0.0]]),
            matrix(&["a"], &[&[0.0, 1.0]]),
        ]);
        let out = pool_mean_unweighted(&b).unwrap();
        assert_eq!(out.row(0).values(), &[0.5, 0.5]);
    }

    #[test]
    fn mean_weighted_examples() {
        let b = bundle(vec![
            matrix(&["a"], &[&[0.6, 0.4]]),
            matrix(&["a"], &[&[0.1, 0.9]]),
        ]);
        // Equal weights reduce to the unweighted mean.
        let even = pool_mean_weighted(&b, &[0.5, 0.5]).unwrap();
        let unweighted = pool_mean_unweighted(&b).unwrap();
        assert_eq!(even.row(0).values(), unweighted.row(0).values());
        // A degenerate weight copies one member.
        let solo = pool_mean_weighted(&b, &[1.0, 0.0]).unwrap();
        assert_eq!(solo.row(0).values(), &[0.6, 0.4]);
        // Plain arithmetic.
        let b2 = bundle(vec![
            matrix(&["a"], &[&[1.0, 0.0]]),
            matrix(&["a"], &[&[0.0, 1.0]]),
        ]);
        let mixed = pool_mean_weighted(&b2, &[0.75, 0.25]).unwrap();
        assert_eq!(mixed.row(0).values(), &[0.75, 0.25]);
    }

    #[test]
    fn mean_weighted_rejects_bad_weights() {
        let b = bundle(vec![
            matrix(&["a"], &[&[0.6, 0.4]]),
            matrix(&["a"], &[&[0.1, 0.9]]),
        ]);
        assert!(matches!(
            pool_mean_weighted(&b, &[1.0]),
            Err(Error::WeightShape(_))
        ));
        assert!(matches!(
            pool_mean_weighted(&b, &[0.9, 0.3]),
            Err(Error::WeightShape(_))
        ));
    }

    #[test]
    fn majority_vote_hard_examples() {
        // Three members voting (0, 0, 1).
        let b = bundle(vec![
            matrix(&["a"], &[&[0.9, 0.1]]),
            matrix(&["a"], &[&[0.6, 0.4]]),
            matrix(&["a"], &[&[0.2, 0.8]]),
        ]);
        let out = pool_majority_vote_hard(&b).unwrap();
        assert_eq!(out.row(0).values(), &[1.0, 0.0]);

        // Two members voting (0, 1): tie resolves to class 0.
        let b = bundle(vec![
            matrix(&["a"], &[&[0.9, 0.1]]),
            matrix(&["a"], &[&[0.2, 0.8]]),
        ]);
        let out = pool_majority_vote_hard(&b).unwrap();
        assert_eq!(out.row(0).values(), &[1.0, 0.0]);

        // A single member: one-hot of its argmax.
        let b = bundle(vec![matrix(&["a"], &[&[0.3, 0.7]])]);
        let out = pool_majority_vote_hard(&b).unwrap();
        assert_eq!(out.row(0).values(), &[0.0, 1.0]);
    }

    #[test]
    fn majority_vote_soft_examples() {
        let b = bundle(vec![
            matrix(&["a"], &[&[1.0, 0.0]]),
            matrix(&["a"], &[&[1.0, 0.0]]),
        ]);
        let out = pool_majority_vote_soft(&b).unwrap();
        let row = out.row(0).values();
        let expected = (2.0f64).exp() / ((2.0f64).exp() + 1.0);
        assert!((row[0] - expected).abs() < 1e-10);
        assert!((row[0] - 0.8808).abs() < 1e-4);
        assert!((row[1] - 0.1192).abs() < 1e-4);

        let b = bundle(vec![
            matrix(&["a"], &[&[0.5, 0.5]]),
            matrix(&["a"], &[&[0.5, 0.5]]),
        ]);
        let out = pool_majority_vote_soft(&b).unwrap();
        assert_eq!(out.row(0).values(), &[0.5, 0.5]);

        let b = bundle(vec![matrix(&["a"], &[&[0.5, 0.5]])]);
        let out = pool_majority_vote_soft(&b).unwrap();
        assert_eq!(out.row(0).values(), &[0.5, 0.5]);
    }

    #[test]
    fn global_argmax_examples() {
        let b = bundle(vec![
            matrix(&["a"], &[&[0.6, 0.4]]),
            matrix(&["a"], &[&[0.3, 0.7]]),
        ]);
        let out = pool_global_argmax(&b).unwrap();
        assert_eq!(out.row(0).values(), &[0.0, 0.7]);
        assert!(out.row(0).is_degenerate());

        let b = bundle(vec![matrix(&["a"], &[&[0.9, 0.1]])]);
        let out = pool_global_argmax(&b).unwrap();
        assert_eq!(out.row(0).values(), &[0.9, 0.0]);

        // Full tie: lowest class, then lowest member.
        let b = bundle(vec![
            matrix(&["a"], &[&[0.5, 0.5]]),
            matrix(&["a"], &[&[0.5, 0.5]]),
        ]);
        let out = pool_global_argmax(&b).unwrap();
        assert_eq!(out.row(0).values(), &[0.5, 0.0]);
    }

    #[test]
    fn fit_static_kind_is_stateless() {
        let b = bundle(vec![matrix(&["a", "b"], &[&[1.0, 0.0], &[0.0, 1.0]])]);
        let l = labels(&["a", "b"], &[0, 1]);
        let pooler = fit_pooler(PoolerKind::MeanUnweighted, &b, &l).unwrap();
        assert_eq!(pooler.state, PoolerState::Stateless);
        assert_eq!(pooler.member_count, 1);
        assert_eq!(pooler.class_count, 2);
    }

    /// Two members engineered so member 0 scores macro-F1 0.8 and member 1
    /// scores 0.2 on the fitting labels.
    fn scored_fixture() -> (EnsembleBundle, LabelVector) {
        let ids = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"];
        let truth = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        // Member 0 mislabels two samples (one per class): per-class F1 0.8.
        let m0_preds = [0, 0, 0, 0, 1, 0, 1, 1, 1, 1];
        // Member 1 gets only two samples right (one per class): F1 0.2.
        let m1_preds = [0, 1, 1, 1, 1, 0, 0, 0, 0, 1];
        let to_matrix = |preds: &[usize]| {
            matrix(
                &ids,
                &preds
                    .iter()
                    .map(|&p| if p == 0 { [0.9, 0.1].as_slice() } else { [0.1, 0.9].as_slice() })
                    .collect::<Vec<_>>(),
            )
        };
        (
            bundle(vec![to_matrix(&m0_preds), to_matrix(&m1_preds)]),
            labels(&ids, &truth),
        )
    }

    #[test]
    fn mean_weighted_fit_normalizes_f1_scores() {
        let (b, l) = scored_fixture();
        let f1_0 = macro_f1(&b.members()[0].matrix, &l).unwrap();
        let f1_1 = macro_f1(&b.members()[1].matrix, &l).unwrap();
        assert!((f1_0 - 0.8).abs() < 1e-12);
        assert!((f1_1 - 0.2).abs() < 1e-12);
        let pooler = fit_pooler(PoolerKind::MeanWeighted, &b, &l).unwrap();
        match &pooler.state {
            PoolerState::MemberWeights { weights } => {
                assert!((weights[0] - 0.8).abs() < 1e-12);
                assert!((weights[1] - 0.2).abs() < 1e-12);
            }
            other => panic!("unexpected state {other:?}"),
        }
    }

    #[test]
    fn best_model_picks_higher_f1() {
        let (b, l) = scored_fixture();
        // Swap members so the better one sits at index 1.
        let swapped = EnsembleBundle::new(vec![
            b.members()[1].clone(),
            b.members()[0].clone(),
        ])
        .unwrap();
        let pooler = fit_pooler(PoolerKind::BestModel, &swapped, &l).unwrap();
        assert_eq!(pooler.state, PoolerState::BestIndex { index: 1 });
        // Pooling copies the selected member bit for bit.
        let out = pool(&pooler, &swapped).unwrap();
        assert_eq!(&out, &swapped.members()[1].matrix);
    }

    #[test]
    fn pool_checks_shapes() {
        let (b, l) = scored_fixture();
        let pooler = fit_pooler(PoolerKind::MeanWeighted, &b, &l).unwrap();
        let single = EnsembleBundle::new(vec![b.members()[0].clone()]).unwrap();
        assert!(matches!(
            pool(&pooler, &single),
            Err(Error::ShapeMismatch(_))
        ));
        // Static poolers accept any member count.
        let mean = fit_pooler(PoolerKind::MeanUnweighted, &b, &l).unwrap();
        assert!(pool(&mean, &single).is_ok());
    }

    #[test]
    fn trainable_kinds_need_two_labels() {
        let b = bundle(vec![matrix(&["a", "b"], &[&[1.0, 0.0], &[0.9, 0.1]])]);
        let l = labels(&["a", "b"], &[0, 0]);
        assert!(matches!(
            fit_pooler(PoolerKind::KNearestNeighbors, &b, &l),
            Err(Error::DegenerateLabels(_))
        ));
    }

    #[test]
    fn stacked_features_are_member_major() {
        let b = bundle(vec![
            matrix(&["a"], &[&[0.6, 0.4]]),
            matrix(&["a"], &[&[0.1, 0.9]]),
        ]);
        let features = stacked_features(&b);
        assert_eq!(features, vec![vec![0.6, 0.4, 0.1, 0.9]]);
    }

    #[test]
    fn trained_pooler_roundtrip() {
        // Labels follow member 0's argmax; a stacked tree should learn that
        // and reproduce the training labels exactly.
        let ids = ["a", "b", "c", "d", "e", "f"];
        let truth = [0usize, 1, 0, 1, 0, 1];
        let rows0: Vec<Vec<f64>> = truth
            .iter()
            .map(|&t| if t == 0 { vec![0.8, 0.2] } else { vec![0.3, 0.7] })
            .collect();
        let rows1: Vec<Vec<f64>> = truth.iter().map(|_| vec![0.5, 0.5]).collect();
        let b = bundle(vec![
            matrix(&ids, &rows0.iter().map(Vec::as_slice).collect::<Vec<_>>()),
            matrix(&ids, &rows1.iter().map(Vec::as_slice).collect::<Vec<_>>()),
        ]);
        let l = labels(&ids, &truth);
        let pooler = fit_pooler(PoolerKind::DecisionTree, &b, &l).unwrap();
        let out = pool(&pooler, &b).unwrap();
        assert_eq!(out.argmax_classes(), truth.to_vec());
    }

    #[test]
    fn pooler_kind_name_roundtrip() {
        for kind in PoolerKind::ALL {
            let parsed: PoolerKind = kind.name().parse().unwrap();
            assert_eq!(parsed, kind);
        }
        assert!("boosting".parse::<PoolerKind>().is_err());
    }
}
