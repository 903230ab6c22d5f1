//! Desk-scale experiment engine: synthetic Gaussian-blob datasets, small
//! softmax-regression base learners trained with weighted focal loss under
//! an early-stopping/checkpoint protocol, and orchestration of the
//! baseline / augmenting / stacking / bagging comparisons.
//!
//! Base learners are linear on purpose; ensemble diversity comes from
//! feature-subset masking and per-member init seeds rather than from
//! architecture variety. Everything is deterministic given the configured
//! seeds, and reports aggregate in a fixed order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::softmax;
use crate::metrics::{evaluate, MetricReport};
use crate::poolers::{fit_pooler, pool, pool_mean_unweighted, PoolerKind};
use crate::sampling::{
    compute_class_weights, kfold_split, largest_remainder_counts, percentage_split, KFoldSpec,
    SplitRatios,
};
use crate::types::{
    Assignment, BundleMember, ClassProbabilities, ClassWeights, EnsembleBundle, LabelVector,
    PredictionMatrix, SourceKind, SplitAssignment,
};

/// Synthetic dataset layout: isotropic Gaussian blobs, one center per
/// class, with optional label noise and class imbalance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_classes: usize,
    pub n_features: usize,
    /// Approximate pairwise distance between class centers.
    pub class_separation: f64,
    /// Fraction of labels reassigned uniformly at random, in `[0, 0.5)`.
    #[serde(default)]
    pub label_noise: f64,
    /// Optional per-class proportions; uniform when absent.
    #[serde(default)]
    pub imbalance: Option<Vec<f64>>,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::Config("n_classes must be at least 2".into()));
        }
        if self.n_samples < 4 * self.n_classes {
            return Err(Error::Config(format!(
                "n_samples = {} is below 4 * n_classes = {}",
                self.n_samples,
                4 * self.n_classes
            )));
        }
        if self.n_features == 0 {
            return Err(Error::Config("n_features must be positive".into()));
        }
        if !(self.class_separation > 0.0) {
            return Err(Error::Config("class_separation must be positive".into()));
        }
        if !(0.0..0.5).contains(&self.label_noise) {
            return Err(Error::Config("label_noise must lie in [0, 0.5)".into()));
        }
        if let Some(proportions) = &self.imbalance {
            if proportions.len() != self.n_classes {
                return Err(Error::Config(format!(
                    "{} imbalance proportions for {} classes",
                    proportions.len(),
                    self.n_classes
                )));
            }
            let sum: f64 = proportions.iter().sum();
            if proportions.iter().any(|&p| p <= 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Config(
                    "imbalance proportions must be positive and sum to 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A dense feature matrix carrying its sample ids.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    sample_ids: Vec<String>,
    rows: Vec<Vec<f64>>,
    feature_count: usize,
}

impl FeatureMatrix {
    pub fn new(sample_ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if sample_ids.len() != rows.len() || rows.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "{} ids for {} feature rows",
                sample_ids.len(),
                rows.len()
            )));
        }
        let feature_count = rows[0].len();
        if rows.iter().any(|r| r.len() != feature_count) {
            return Err(Error::ShapeMismatch("ragged feature rows".into()));
        }
        Ok(Self {
            sample_ids,
            rows,
            feature_count,
        })
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    /// Restricts to the given ids, in order.
    pub fn select(&self, ids: &[String]) -> Result<Self> {
        let index: std::collections::HashMap<&str, usize> = self
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

/// Draws Gaussian blobs with one seeded random center per class, then
/// reassigns a `label_noise` fraction of labels uniformly at random.
/// Bit-identical per seed.
pub fn generate_dataset(spec: &SyntheticSpec) -> Result<(FeatureMatrix, LabelVector)> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);

    // Centers: random directions scaled so pairwise distances land near
    // class_separation (two random points on a sphere of radius r sit at
    // expected distance r * sqrt(2)).
    let radius = spec.class_separation / std::f64::consts::SQRT_2;
    let mut centers = Vec::with_capacity(spec.n_classes);
    for _ in 0..spec.n_classes {
        let mut direction: Vec<f64> = (0..spec.n_features)
            .map(|_| std_normal(&mut rng))
            .collect();
        let norm: f64 = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut direction {
            *x *= radius / norm;
        }
        centers.push(direction);
    }

    let uniform = vec![1.0 / spec.n_classes as f64; spec.n_classes];
    let proportions = spec.imbalance.as_deref().unwrap_or(&uniform);
    let counts = largest_remainder_counts(spec.n_samples, proportions);

    let mut sample_ids = Vec::with_capacity(spec.n_samples);
    let mut rows = Vec::with_capacity(spec.n_samples);
    let mut labels = Vec::with_capacity(spec.n_samples);
    let mut serial = 0usize;
    for (class, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            let row: Vec<f64> = centers[class]
                .iter()
                .map(|&c| c + std_normal(&mut rng))
                .collect();
            sample_ids.push(format!("s{serial:06}"));
            rows.push(row);
            labels.push(class);
            serial += 1;
        }
    }

    let noisy = (spec.label_noise * spec.n_samples as f64).round() as usize;
    if noisy > 0 {
        let mut order: Vec<usize> = (0..spec.n_samples).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        for &i in order.iter().take(noisy) {
            labels[i] = rng.random_range(0..spec.n_classes);
        }
    }

    Ok((
        FeatureMatrix::new(sample_ids.clone(), rows)?,
        LabelVector::new(sample_ids, labels)?,
    ))
}

/// Focal-loss parameters: the focusing exponent and per-class weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocalLossParams {
    pub gamma: f64,
    pub alpha: ClassWeights,
}

impl FocalLossParams {
    pub fn new(gamma: f64, alpha: ClassWeights) -> Result<Self> {
        if gamma < 0.0 || !gamma.is_finite() {
            return Err(Error::Parameter(format!(
                "focal gamma must be >= 0, got {gamma}"
            )));
        }
        Ok(Self { gamma, alpha })
    }
}

const P_CLAMP: f64 = 1e-12;

/// `-alpha_t (1 - p_t)^gamma log(p_t)` with `p_t` clamped at 1e-12.
pub fn focal_loss(probs: &ClassProbabilities, true_class: usize, params: &FocalLossParams) -> f64 {
    focal_loss_raw(probs.values(), true_class, params)
}

fn focal_loss_raw(probs: &[f64], true_class: usize, params: &FocalLossParams) -> f64 {
    let p_t = probs[true_class].max(P_CLAMP);
    let alpha = params.alpha.get(true_class);
    -alpha * (1.0 - p_t).powf(params.gamma) * p_t.ln()
}

/// Exact gradient of `focal_loss(softmax(logits), true_class)` with respect
/// to the logits.
pub fn focal_loss_gradient(
    logits: &[f64],
    true_class: usize,
    params: &FocalLossParams,
) -> Vec<f64> {
    let probs = softmax(logits);
    focal_gradient_from_probs(&probs, true_class, params)
}

fn focal_gradient_from_probs(
    probs: &[f64],
    true_class: usize,
    params: &FocalLossParams,
) -> Vec<f64> {
    let p_t = probs[true_class].max(P_CLAMP);
    let alpha = params.alpha.get(true_class);
    let one_minus = 1.0 - p_t;
    if one_minus <= 0.0 {
        // Perfect confidence is the loss minimum: zero gradient.
        return vec![0.0; probs.len()];
    }
    // d loss / d p_t, then through the softmax Jacobian row for p_t.
    let term = if params.gamma == 0.0 {
        0.0
    } else {
        params.gamma * one_minus.powf(params.gamma - 1.0) * p_t.ln()
    };
    let dl_dpt = alpha * (term - one_minus.powf(params.gamma) / p_t);
    probs
        .iter()
        .enumerate()
        .map(|(c, &p_c)| {
            let jac = p_t * (f64::from(c == true_class) - p_c);
            dl_dpt * jac
        })
        .collect()
}

/// One base learner's training recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseLearnerSpec {
    pub member_name: String,
    /// Fraction of features the member sees, in `(0, 1]`.
    pub feature_subset_fraction: f64,
    pub init_seed: u64,
    pub learning_rate: f64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_patience")]
    pub patience: usize,
}

fn default_max_epochs() -> usize {
    1000
}

fn default_patience() -> usize {
    15
}

impl BaseLearnerSpec {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.feature_subset_fraction)
            || self.feature_subset_fraction == 0.0
        {
            return Err(Error::Config(format!(
                "feature_subset_fraction {} outside (0, 1]",
                self.feature_subset_fraction
            )));
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Config(
                "max_epochs and patience must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// A trained softmax-regression base learner over a feature subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseModel {
    pub member_name: String,
    feature_indices: Vec<usize>,
    /// Row-major `C x F_sub`.
    weights: Vec<f64>,
    bias: Vec<f64>,
    class_count: usize,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub best_val_loss: f64,
}

impl BaseModel {
    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn feature_indices(&self) -> &[usize] {
        &self.feature_indices
    }

    fn logits(&self, row: &[f64]) -> Vec<f64> {
        let f = self.feature_indices.len();
        (0..self.class_count)
            .map(|c| {
                let w = &self.weights[c * f..(c + 1) * f];
                self.bias[c]
                    + w.iter()
                        .zip(&self.feature_indices)
                        .map(|(&wi, &idx)| wi * row[idx])
                        .sum::<f64>()
            })
            .collect()
    }

    /// Softmax predictions for every row of `features`.
    pub fn predict(&self, features: &FeatureMatrix) -> Result<PredictionMatrix> {
        let rows = features
            .rows()
            .iter()
            .map(|row| ClassProbabilities::new(softmax(&self.logits(row))))
            .collect::<Result<Vec<_>>>()?;
        PredictionMatrix::new(features.sample_ids().to_vec(), rows)
    }
}

/// Trains a softmax regression with full-batch gradient descent on the
/// weighted focal loss, checkpointing the best validation epoch and
/// stopping after `patience` epochs without improvement. Class weights come
/// from the training partition of `split`.
pub fn train_base_learner(
    features: &FeatureMatrix,
    labels: &LabelVector,
    split: &SplitAssignment,
    spec: &BaseLearnerSpec,
    gamma: f64,
) -> Result<BaseModel> {
    spec.validate()?;
    let train_ids = split.ids_where(labels, Assignment::is_training);
    let val_ids = split.ids_where(labels, Assignment::is_validation);
    if train_ids.is_empty() || val_ids.is_empty() {
        return Err(Error::DegenerateSplit(
            "split lacks a training or validation partition".into(),
        ));
    }
    let class_count = labels.class_count();
    let alpha = compute_class_weights(labels, split)?;
    let params = FocalLossParams::new(gamma, alpha)?;

    let train_x = features.select(&train_ids)?;
    let train_y = labels.select(&train_ids)?;
    let val_x = features.select(&val_ids)?;
    let val_y = labels.select(&val_ids)?;

    let mut rng = ChaCha20Rng::seed_from_u64(spec.init_seed);
    let total_features = features.feature_count();
    let subset_size = ((spec.feature_subset_fraction * total_features as f64).ceil() as usize)
        .clamp(1, total_features);
    let mut all: Vec<usize> = (0..total_features).collect();
    use rand::seq::SliceRandom;
    all.shuffle(&mut rng);
    let mut feature_indices = all[..subset_size].to_vec();
    feature_indices.sort_unstable();

    let f = feature_indices.len();
    let mut weights: Vec<f64> = (0..class_count * f)
        .map(|_| 0.01 * std_normal(&mut rng))
        .collect();
    let mut bias = vec![0.0; class_count];

    let project = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
        rows.iter()
            .map(|row| feature_indices.iter().map(|&i| row[i]).collect())
            .collect()
    };
    let train_rows = project(train_x.rows());
    let val_rows = project(val_x.rows());
    let n_train = train_rows.len() as f64;

    let forward = |weights: &[f64], bias: &[f64], row: &[f64]| -> Vec<f64> {
        (0..class_count)
            .map(|c| {
                let w = &weights[c * f..(c + 1) * f];
                bias[c] + w.iter().zip(row).map(|(&wi, &xi)| wi * xi).sum::<f64>()
            })
            .collect()
    };
    let mean_val_loss = |weights: &[f64], bias: &[f64]| -> f64 {
        let total: f64 = val_rows
            .iter()
            .zip(val_y.labels())
            .map(|(row, &label)| {
                let probs = softmax(&forward(weights, bias, row));
                focal_loss_raw(&probs, label, &params)
            })
            .sum();
        total / val_rows.len() as f64
    };

    let mut best_weights = weights.clone();
    let mut best_bias = bias.clone();
    let mut best_val_loss = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut stall = 0usize;
    let mut epochs_run = 0usize;

    for epoch in 1..=spec.max_epochs {
        epochs_run = epoch;
        let mut grad_w = vec![0.0; class_count * f];
        let mut grad_b = vec![0.0; class_count];
        for (row, &label) in train_rows.iter().zip(train_y.labels()) {
            let probs = softmax(&forward(&weights, &bias, row));
            let g = focal_gradient_from_probs(&probs, label, &params);
            for c in 0..class_count {
                let w_row = &mut grad_w[c * f..(c + 1) * f];
                for (gw, &xi) in w_row.iter_mut().zip(row) {
                    *gw += g[c] * xi;
                }
                grad_b[c] += g[c];
            }
        }
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= spec.learning_rate * g / n_train;
        }
        for (b, g) in bias.iter_mut().zip(&grad_b) {
            *b -= spec.learning_rate * g / n_train;
        }

        let val_loss = mean_val_loss(&weights, &bias);
        if val_loss.is_finite() && val_loss < best_val_loss {
            best_val_loss = val_loss;
            best_weights.copy_from_slice(&weights);
            best_bias.copy_from_slice(&bias);
            best_epoch = epoch;
            stall = 0;
        } else {
            stall += 1;
            if stall >= spec.patience {
                break;
            }
        }
    }

    Ok(BaseModel {
        member_name: spec.member_name.clone(),
        feature_indices,
        weights: best_weights,
        bias: best_bias,
        class_count,
        best_epoch,
        epochs_run,
        best_val_loss,
    })
}

/// Test-time augmentation layout: number of perturbed copies and the
/// feature-space jitter scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    #[serde(default = "default_copies")]
    pub copies: usize,
    pub jitter_sigma: f64,
    pub seed: u64,
}

fn default_copies() -> usize {
    15
}

/// Predicts on `copies` seeded-jitter variants of the features. Copy 0 is
/// always noiseless so augmenting can only add information; the remaining
/// copies add independent Gaussian noise per entry.
pub fn predict_augmented(
    model: &BaseModel,
    features: &FeatureMatrix,
    aug: &AugmentSpec,
) -> Result<EnsembleBundle> {
    if aug.copies == 0 {
        return Err(Error::Parameter("augmenting needs at least one copy".into()));
    }
    if aug.jitter_sigma < 0.0 || !aug.jitter_sigma.is_finite() {
        return Err(Error::Parameter(format!(
            "jitter_sigma must be >= 0, got {}",
            aug.jitter_sigma
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(aug.seed);
    let mut members = Vec::with_capacity(aug.copies);
    for copy in 0..aug.copies {
        let matrix = if copy == 0 {
            model.predict(features)?
        } else {
            let jittered: Vec<Vec<f64>> = features
                .rows()
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&x| x + aug.jitter_sigma * std_normal(&mut rng))
                        .collect()
                })
                .collect();
            let jittered = FeatureMatrix::new(features.sample_ids().to_vec(), jittered)?;
            model.predict(&jittered)?
        };
        members.push(BundleMember {
            name: format!("{}/aug{copy}", model.member_name),
            source_kind: SourceKind::AugmentedCopy,
            matrix,
        });
    }
    EnsembleBundle::new(members)
}

/// The four ensemble-learning scenarios under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Baseline,
    Augmenting,
    Stacking,
    Bagging,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Scenario::Baseline => "baseline",
            Scenario::Augmenting => "augmenting",
            Scenario::Stacking => "stacking",
            Scenario::Bagging => "bagging",
        };
        f.write_str(name)
    }
}

/// Percentage-split settings for an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    #[serde(default)]
    pub ratios: SplitRatios,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub stratified: bool,
}

fn default_true() -> bool {
    true
}

/// Full experiment description, as read from a config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub dataset: SyntheticSpec,
    pub split: SplitConfig,
    pub learners: Vec<BaseLearnerSpec>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub poolers: Vec<PoolerKind>,
    #[serde(default)]
    pub kfold: Option<KFoldSpec>,
    #[serde(default)]
    pub augment: Option<AugmentSpec>,
}

fn default_gamma() -> f64 {
    2.0
}

/// One evaluated method inside a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub name: String,
    pub report: MetricReport,
}

/// Percentage gain of a method over the baseline best.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEntry {
    pub name: String,
    pub f1_gain_pct: Option<f64>,
    pub accuracy_gain_pct: Option<f64>,
}

/// Output of [`run_experiment`]: baseline results, technique results, and
/// percentage deltas against the best baseline member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub scenario: Scenario,
    pub baseline: Vec<MethodResult>,
    pub baseline_best: String,
    pub methods: Vec<MethodResult>,
    pub deltas: Vec<DeltaEntry>,
}

impl EvaluationReport {
    /// The baseline entry with the highest macro-F1 (ties to the first).
    pub fn baseline_best_report(&self) -> &MethodResult {
        let mut best = &self.baseline[0];
        for entry in &self.baseline[1..] {
            if entry.report.macro_avg.f1 > best.report.macro_avg.f1 {
                best = entry;
            }
        }
        best
    }
}

fn percentage_gain(value: f64, base: f64) -> Option<f64> {
    (base != 0.0).then(|| (value - base) / base * 100.0)
}

fn std_normal(rng: &mut ChaCha20Rng) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

struct Partitions {
    ensemble_train_ids: Vec<String>,
    testing_ids: Vec<String>,
}

fn partitions(labels: &LabelVector, split: &SplitAssignment) -> Result<Partitions> {
    let ensemble_train_ids =
        split.ids_where(labels, |a| matches!(a, Assignment::EnsembleTrain));
    let testing_ids = split.ids_where(labels, |a| matches!(a, Assignment::Testing));
    if ensemble_train_ids.is_empty() || testing_ids.is_empty() {
        return Err(Error::DegenerateSplit(
            "split lacks an ensemble-train or testing partition".into(),
        ));
    }
    Ok(Partitions {
        ensemble_train_ids,
        testing_ids,
    })
}

/// Runs one scenario end to end and reports per-method metrics plus deltas
/// against the baseline best. Deterministic given the configured seeds.
pub fn run_experiment(config: &ExperimentConfig) -> Result<EvaluationReport> {
    if config.learners.is_empty() {
        return Err(Error::Config("at least one base learner is required".into()));
    }
    match config.scenario {
        Scenario::Stacking if config.learners.len() < 2 => {
            return Err(Error::Config("stacking needs at least 2 base learners".into()));
        }
        Scenario::Stacking | Scenario::Bagging if config.poolers.is_empty() => {
            return Err(Error::Config(format!(
                "{} needs at least one pooler",
                config.scenario
            )));
        }
        Scenario::Bagging if config.kfold.is_none() => {
            return Err(Error::Config("bagging needs a kfold spec".into()));
        }
        Scenario::Augmenting if config.augment.is_none() => {
            return Err(Error::Config("augmenting needs an augment spec".into()));
        }
        _ => {}
    }

    let (features, labels) = generate_dataset(&config.dataset)?;
    let split = percentage_split(
        &labels,
        &config.split.ratios,
        config.split.seed,
        config.split.stratified,
    )?;
    let parts = partitions(&labels, &split)?;
    let testing_x = features.select(&parts.testing_ids)?;
    let testing_y = labels.select(&parts.testing_ids)?;
    let ensemble_x = features.select(&parts.ensemble_train_ids)?;
    let ensemble_y = labels.select(&parts.ensemble_train_ids)?;

    // Baseline models are always trained: every technique is reported as a
    // delta against the best of them.
    let models: Vec<BaseModel> = config
        .learners
        .par_iter()
        .map(|spec| train_base_learner(&features, &labels, &split, spec, config.gamma))
        .collect::<Result<Vec<_>>>()?;

    let mut baseline = Vec::with_capacity(models.len());
    for model in &models {
        let predictions = model.predict(&testing_x)?;
        baseline.push(MethodResult {
            name: model.member_name.clone(),
            report: evaluate(&predictions, &testing_y)?,
        });
    }

    let mut methods = Vec::new();
    match config.scenario {
        Scenario::Baseline => {}
        Scenario::Augmenting => {
            let aug = config.augment.as_ref().expect("checked above");
            for model in &models {
                let bundle = predict_augmented(model, &testing_x, aug)?;
                let pooled = pool_mean_unweighted(&bundle)?;
                methods.push(MethodResult {
                    name: format!("{}/augmented", model.member_name),
                    report: evaluate(&pooled, &testing_y)?,
                });
            }
        }
        Scenario::Stacking => {
            let to_bundle = |x: &FeatureMatrix| -> Result<EnsembleBundle> {
                EnsembleBundle::new(
                    models
                        .iter()
                        .map(|m| {
                            Ok(BundleMember {
                                name: m.member_name.clone(),
                                source_kind: SourceKind::Architecture,
                                matrix: m.predict(x)?,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?,
                )
            };
            let fit_bundle = to_bundle(&ensemble_x)?;
            let test_bundle = to_bundle(&testing_x)?;
            for &kind in &config.poolers {
                let pooler = fit_pooler(kind, &fit_bundle, &ensemble_y)?;
                let pooled = pool(&pooler, &test_bundle)?;
                methods.push(MethodResult {
                    name: kind.name().to_string(),
                    report: evaluate(&pooled, &testing_y)?,
                });
            }
        }
        Scenario::Bagging => {
            let kfold = config.kfold.as_ref().expect("checked above");
            let folds = kfold_split(&labels, &split, kfold)?;
            for spec in &config.learners {
                let fold_models: Vec<BaseModel> = folds
                    .par_iter()
                    .map(|fold_split| {
                        train_base_learner(&features, &labels, fold_split, spec, config.gamma)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let to_bundle = |x: &FeatureMatrix| -> Result<EnsembleBundle> {
                    EnsembleBundle::new(
                        fold_models
                            .iter()
                            .enumerate()
                            .map(|(fold, m)| {
                                Ok(BundleMember {
                                    name: format!("{}/fold{fold}", m.member_name),
                                    source_kind: SourceKind::Fold,
                                    matrix: m.predict(x)?,
                                })
                            })
                            .collect::<Result<Vec<_>>>()?,
                    )
                };
                let fit_bundle = to_bundle(&ensemble_x)?;
                let test_bundle = to_bundle(&testing_x)?;
                for &kind in &config.poolers {
                    let pooler = fit_pooler(kind, &fit_bundle, &ensemble_y)?;
                    let pooled = pool(&pooler, &test_bundle)?;
                    methods.push(MethodResult {
                        name: format!("{}/{}", spec.member_name, kind.name()),
                        report: evaluate(&pooled, &testing_y)?,
                    });
                }
            }
        }
    }

    let baseline_best_name;
    let deltas;
    {
        let mut best = &baseline[0];
        for entry in &baseline[1..] {
            if entry.report.macro_avg.f1 > best.report.macro_avg.f1 {
                best = entry;
            }
        }
        baseline_best_name = best.name.clone();
        let base_f1 = best.report.macro_avg.f1;
        let base_acc = best.report.macro_avg.accuracy;
        deltas = methods
            .iter()
            .map(|m| DeltaEntry {
                name: m.name.clone(),
                f1_gain_pct: percentage_gain(m.report.macro_avg.f1, base_f1),
                accuracy_gain_pct: percentage_gain(m.report.macro_avg.accuracy, base_acc),
            })
            .collect();
    }

    Ok(EvaluationReport {
        scenario: config.scenario,
        baseline,
        baseline_best: baseline_best_name,
        methods,
        deltas,
    })
}
