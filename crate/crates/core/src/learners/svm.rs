//! C-SVC with an RBF kernel, solved by SMO-style dual optimization over
//! maximal-violating pairs, one-vs-one across all class pairs.
//!
//! The dual per binary problem is `min 1/2 a'Qa - e'a` over the box
//! `0 <= a_i <= C` with `y'a = 0`, `Q_ij = y_i y_j K(x_i, x_j)`. Pair
//! updates move along the constraint manifold, so `y'a = 0` holds exactly
//! throughout. Multiclass prediction is pairwise voting with ties going to
//! the lowest class index.

use serde::{Deserialize, Serialize};

use super::TrainSet;
use crate::types::argmax_ties_low;

const SMO_MAX_ITER: usize = 100_000;
const KKT_TOLERANCE: f64 = 1e-3;

/// One fitted binary subproblem of the one-vs-one scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub class_pos: usize,
    pub class_neg: usize,
    /// Support vectors (rows with positive dual coefficient).
    support: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    coef: Vec<f64>,
    bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl BinarySvm {
    /// Decision value `sum_i coef_i K(sv_i, x) + b`; positive favors
    /// `class_pos`.
    fn decision(&self, row: &[f64], gamma: f64) -> f64 {
        let mut sum = self.bias;
        for (sv, &c) in self.support.iter().zip(&self.coef) {
            sum += c * rbf(sv, row, gamma);
        }
        sum
    }
}

/// A fitted one-vs-one RBF support vector machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pairs: Vec<BinarySvm>,
    gamma: f64,
    c_reg: f64,
    feature_count: usize,
    class_count: usize,
    pub converged: bool,
}

impl SvmModel {
    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn pairs(&self) -> &[BinarySvm] {
        &self.pairs
    }

    /// Pairwise votes per class.
    pub fn votes(&self, row: &[f64]) -> Vec<usize> {
        let mut votes = vec![0usize; self.class_count];
        for pair in &self.pairs {
            if pair.decision(row, self.gamma) > 0.0 {
                votes[pair.class_pos] += 1;
            } else {
                votes[pair.class_neg] += 1;
            }
        }
        votes
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        let votes = self.votes(row);
        let as_f: Vec<f64> = votes.iter().map(|&v| v as f64).collect();
        argmax_ties_low(&as_f)
    }

    /// Vote fractions: `votes_c / total_votes`.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let votes = self.votes(row);
        let total: usize = votes.iter().sum();
        votes.iter().map(|&v| v as f64 / total as f64).collect()
    }
}

pub(crate) fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let dist: f64 = a.iter().zip(b).map(|(&x, &z)| (x - z) * (x - z)).sum();
    (-gamma * dist).exp()
}

/// Raw output of one SMO run, exposed so independent solvers can be
/// compared against it.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Dual objective `1/2 a'Qa - e'a` at termination.
    pub objective: f64,
}

/// Solves the binary dual by repeatedly optimizing the maximal violating
/// pair, up to the iteration cap or the KKT tolerance.
pub fn smo_solve(kernel: &[f64], y: &[f64], n: usize, c_reg: f64, tol: f64) -> SmoSolution {
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n]; // grad_i = (Q a)_i - 1
    let mut iterations = 0;
    let mut converged = false;
    let bias;

    loop {
        // Maximal violating pair over I_up / I_low.
        let mut m_val = f64::NEG_INFINITY;
        let mut m_idx = usize::MAX;
        let mut mm_val = f64::INFINITY;
        let mut mm_idx = usize::MAX;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c_reg) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c_reg);
            if in_up && v > m_val {
                m_val = v;
                m_idx = t;
            }
            if in_low && v < mm_val {
                mm_val = v;
                mm_idx = t;
            }
        }
        if m_idx == usize::MAX || mm_idx == usize::MAX || m_val - mm_val <= tol {
            converged = true;
            bias = match (m_idx, mm_idx) {
                (usize::MAX, _) | (_, usize::MAX) => 0.0,
                _ => (m_val + mm_val) / 2.0,
            };
            break;
        }
        if iterations >= SMO_MAX_ITER {
            bias = (m_val + mm_val) / 2.0;
            break;
        }
        iterations += 1;

        let (i, j) = (m_idx, mm_idx);
        // Move along alpha_i += y_i t, alpha_j -= y_j t. Curvature along
        // the direction is K_ii + K_jj - 2 K_ij >= 0.
        let mut curvature = kernel[i * n + i] + kernel[j * n + j] - 2.0 * kernel[i * n + j];
        if curvature <= 0.0 {
            curvature = 1e-12;
        }
        let slope = y[i] * grad[i] - y[j] * grad[j]; // = -(m_val - mm_val)
        let mut step = -slope / curvature;

        // Box bounds on the step from both coordinates.
        let (lo_i, hi_i) = if y[i] > 0.0 {
            (-alpha[i], c_reg - alpha[i])
        } else {
            (alpha[i] - c_reg, alpha[i])
        };
        let (lo_j, hi_j) = if y[j] > 0.0 {
            (alpha[j] - c_reg, alpha[j])
        } else {
            (-alpha[j], c_reg - alpha[j])
        };
        step = step.clamp(lo_i.max(lo_j), hi_i.min(hi_j));

        let delta_i = y[i] * step;
        let delta_j = -y[j] * step;
        alpha[i] += delta_i;
        alpha[j] += delta_j;
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * delta_i + q(t, j) * delta_j;
        }
    }

    let objective = 0.5
        * alpha
            .iter()
            .zip(&grad)
            .map(|(&a, &g)| a * (g - 1.0))
            .sum::<f64>();
    SmoSolution {
        alpha,
        bias,
        iterations,
        converged,
        objective,
    }
}

/// Fits a one-vs-one C-SVC with RBF kernel; `gamma` defaults to `1 / F`.
pub fn fit_svm(train: &TrainSet, c_reg: f64, gamma: Option<f64>) -> SvmModel {
    let feature_count = train.feature_count();
    let class_count = train.class_count();
    let gamma = gamma.unwrap_or(1.0 / feature_count as f64);

    let mut pairs = Vec::new();
    let mut converged = true;
    for class_pos in 0..class_count {
        for class_neg in class_pos + 1..class_count {
            let indices: Vec<usize> = train
                .labels()
                .iter()
                .enumerate()
                .filter(|&(_, &l)| l == class_pos || l == class_neg)
                .map(|(i, _)| i)
                .collect();
            if indices.is_empty()
                || indices.iter().all(|&i| train.labels()[i] == class_pos)
                || indices.iter().all(|&i| train.labels()[i] == class_neg)
            {
                // One side of the pair is absent from training: decide by
                // whichever class is present, via a constant bias.
                let present_pos = indices
                    .iter()
                    .any(|&i| train.labels()[i] == class_pos);
                pairs.push(BinarySvm {
                    class_pos,
                    class_neg,
                    support: vec![],
                    coef: vec![],
                    bias: if present_pos { 1.0 } else { -1.0 },
                    iterations: 0,
                    converged: true,
                });
                continue;
            }
            let n = indices.len();
            let rows: Vec<&[f64]> = indices
                .iter()
                .map(|&i| train.features()[i].as_slice())
                .collect();
            let y: Vec<f64> = indices
                .iter()
                .map(|&i| if train.labels()[i] == class_pos { 1.0 } else { -1.0 })
                .collect();
            let mut kernel = vec![0.0; n * n];
            for a in 0..n {
                for b in a..n {
                    let k = rbf(rows[a], rows[b], gamma);
                    kernel[a * n + b] = k;
                    kernel[b * n + a] = k;
                }
            }
            let solution = smo_solve(&kernel, &y, n, c_reg, KKT_TOLERANCE);
            converged &= solution.converged;
            let mut support = Vec::new();
            let mut coef = Vec::new();
            for (t, &a) in solution.alpha.iter().enumerate() {
                if a > 0.0 {
                    support.push(rows[t].to_vec());
                    coef.push(a * y[t]);
                }
            }
            pairs.push(BinarySvm {
                class_pos,
                class_neg,
                support,
                coef,
                bias: solution.bias,
                iterations: solution.iterations,
                converged: solution.converged,
            });
        }
    }
    SvmModel {
        pairs,
        gamma,
        c_reg,
        feature_count,
        class_count,
        converged,
    }
}
