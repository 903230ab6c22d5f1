//! Gaussian process classification via the Laplace approximation with a
//! one-vs-rest multiclass strategy.
//!
//! Per class, a binary GP with +-1 labels, RBF kernel
//! `k(x, z) = exp(-||x - z||^2 / (2 l^2))` (unit signal variance), and a
//! logistic likelihood. The posterior mode is found by damped Newton steps
//! on the Laplace objective `psi(f) = log p(y | f) - 1/2 f' K^-1 f`,
//! tracked through the representation `f = K a` so no explicit inverse is
//! formed. Predictive class probabilities use the probit-style
//! approximation `sigma(mu / sqrt(1 + pi sigma^2 / 8))`, renormalized
//! across classes.

use serde::{Deserialize, Serialize};

use super::linalg::{cholesky, matvec, solve_lower, solve_lower_transpose};
use super::TrainSet;
use crate::error::{Error, Result};

/// Hard cap on training size: fitting needs dense `N x N` kernel algebra.
pub const GP_SIZE_GUARD: usize = 5_000;

const NEWTON_TOLERANCE: f64 = 1e-8;
const NEWTON_MAX_ITER: usize = 100;

/// Factors of one binary (class-vs-rest) Laplace fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct GpBinary {
    /// `a = K^-1 f_hat`; predictive mean is `k*' a`.
    coef: Vec<f64>,
    /// Posterior mode over the training latents.
    mode: Vec<f64>,
    /// `sqrt(W)` at the mode.
    sqrt_w: Vec<f64>,
    /// Lower Cholesky factor of `B = I + sqrt(W) K sqrt(W)`.
    chol_b: Vec<f64>,
    converged: bool,
}

/// A fitted one-vs-rest GP classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpModel {
    train_inputs: Vec<Vec<f64>>,
    length_scale: f64,
    classes: Vec<GpBinary>,
    feature_count: usize,
    class_count: usize,
    pub converged: bool,
}

impl GpModel {
    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    /// Posterior mode of the binary problem for `class`.
    pub fn mode(&self, class: usize) -> &[f64] {
        &self.classes[class].mode
    }

    /// Renormalized per-class probit-approximated probabilities.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let n = self.train_inputs.len();
        let kstar: Vec<f64> = self
            .train_inputs
            .iter()
            .map(|x| kernel_value(x, row, self.length_scale))
            .collect();
        let raw: Vec<f64> = self
            .classes
            .iter()
            .map(|binary| {
                let mean: f64 = kstar.iter().zip(&binary.coef).map(|(&k, &a)| k * a).sum();
                let scaled: Vec<f64> = kstar
                    .iter()
                    .zip(&binary.sqrt_w)
                    .map(|(&k, &s)| k * s)
                    .collect();
                let v = solve_lower(&binary.chol_b, n, &scaled);
                let variance = (1.0 - v.iter().map(|&x| x * x).sum::<f64>()).max(0.0);
                sigmoid(mean / (1.0 + std::f64::consts::PI * variance / 8.0).sqrt())
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }
}

fn kernel_value(a: &[f64], b: &[f64], length_scale: f64) -> f64 {
    let dist: f64 = a.iter().zip(b).map(|(&x, &z)| (x - z) * (x - z)).sum();
    (-dist / (2.0 * length_scale * length_scale)).exp()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log sigma(y f)` computed without overflow.
fn log_likelihood(y: f64, f: f64) -> f64 {
    let z = y * f;
    if z > 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

fn laplace_objective(a: &[f64], f: &[f64], y: &[f64]) -> f64 {
    let quad: f64 = a.iter().zip(f).map(|(&ai, &fi)| ai * fi).sum();
    let lik: f64 = y
        .iter()
        .zip(f)
        .map(|(&yi, &fi)| log_likelihood(yi, fi))
        .sum();
    lik - 0.5 * quad
}

pub(crate) struct NewtonOutcome {
    pub binary: GpBinary,
    /// Laplace objective value after every accepted step; consumed by the
    /// monotonicity tests.
    #[cfg_attr(not(test), allow(dead_code))]
    pub trace: Vec<f64>,
}

/// Damped Newton iteration for the binary Laplace mode, via the stable
/// `B = I + sqrt(W) K sqrt(W)` formulation. The damping line search keeps
/// the objective non-decreasing.
pub(crate) fn newton_mode(kernel: &[f64], y: &[f64], n: usize) -> Result<NewtonOutcome> {
    let mut f = vec![0.0; n];
    let mut a = vec![0.0; n];
    let mut objective = laplace_objective(&a, &f, y);
    let mut trace = vec![objective];
    let mut converged = false;

    for _ in 0..NEWTON_MAX_ITER {
        let pi: Vec<f64> = f.iter().map(|&fi| sigmoid(fi)).collect();
        let grad_lik: Vec<f64> = y
            .iter()
            .zip(&pi)
            .map(|(&yi, &pi_i)| (yi + 1.0) / 2.0 - pi_i)
            .collect();
        // grad psi = grad_lik - K^-1 f = grad_lik - a by construction.
        let grad_norm = grad_lik
            .iter()
            .zip(&a)
            .fold(0.0f64, |acc, (&g, &ai)| acc.max((g - ai).abs()));
        if grad_norm < NEWTON_TOLERANCE {
            converged = true;
            break;
        }

        let w: Vec<f64> = pi.iter().map(|&p| p * (1.0 - p)).collect();
        let sqrt_w: Vec<f64> = w.iter().map(|&wi| wi.sqrt()).collect();
        let mut b_mat = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                b_mat[i * n + j] = sqrt_w[i] * kernel[i * n + j] * sqrt_w[j];
            }
            b_mat[i * n + i] += 1.0;
        }
        let chol = cholesky(&b_mat, n)
            .ok_or_else(|| Error::Parameter("kernel matrix is not positive definite".into()))?;

        // Newton target: a_new = b - sqrt(W) B^-1 sqrt(W) K b,
        // where b = W f + grad_lik.
        let b_vec: Vec<f64> = w
            .iter()
            .zip(&f)
            .zip(&grad_lik)
            .map(|((&wi, &fi), &gi)| wi * fi + gi)
            .collect();
        let kb = matvec(kernel, n, &b_vec);
        let scaled: Vec<f64> = sqrt_w.iter().zip(&kb).map(|(&s, &k)| s * k).collect();
        let z = solve_lower(&chol, n, &scaled);
        let z2 = solve_lower_transpose(&chol, n, &z);
        let a_new: Vec<f64> = b_vec
            .iter()
            .zip(sqrt_w.iter().zip(&z2))
            .map(|(&bi, (&si, &zi))| bi - si * zi)
            .collect();
        let f_new = matvec(kernel, n, &a_new);

        // Damping: interpolating a interpolates f = K a linearly.
        let mut step = 1.0;
        loop {
            let a_try: Vec<f64> = a
                .iter()
                .zip(&a_new)
                .map(|(&old, &new)| old + step * (new - old))
                .collect();
            let f_try: Vec<f64> = f
                .iter()
                .zip(&f_new)
                .map(|(&old, &new)| old + step * (new - old))
                .collect();
            let candidate = laplace_objective(&a_try, &f_try, y);
            if candidate >= objective || step < 1e-10 {
                a = a_try;
                f = f_try;
                objective = candidate.max(objective);
                trace.push(objective);
                break;
            }
            step *= 0.5;
        }
    }

    // Final factors at the accepted mode, for predictive variance.
    let pi: Vec<f64> = f.iter().map(|&fi| sigmoid(fi)).collect();
    let sqrt_w: Vec<f64> = pi.iter().map(|&p| (p * (1.0 - p)).sqrt()).collect();
    let mut b_mat = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            b_mat[i * n + j] = sqrt_w[i] * kernel[i * n + j] * sqrt_w[j];
        }
        b_mat[i * n + i] += 1.0;
    }
    let chol_b = cholesky(&b_mat, n)
        .ok_or_else(|| Error::Parameter("kernel matrix is not positive definite".into()))?;

    Ok(NewtonOutcome {
        binary: GpBinary {
            coef: a,
            mode: f,
            sqrt_w,
            chol_b,
            converged,
        },
        trace,
    })
}

/// Fits one binary Laplace GP per class (one-vs-rest).
pub fn fit_gp_classifier(train: &TrainSet, length_scale: f64) -> Result<GpModel> {
    if length_scale <= 0.0 || !length_scale.is_finite() {
        return Err(Error::Parameter(format!(
            "length scale must be positive, got {length_scale}"
        )));
    }
    let n = train.len();
    if n > GP_SIZE_GUARD {
        return Err(Error::SizeGuard(format!(
            "{n} training samples exceed the dense-kernel cap of {GP_SIZE_GUARD}"
        )));
    }
    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let k = kernel_value(&train.features()[i], &train.features()[j], length_scale);
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }
    let mut classes = Vec::with_capacity(train.class_count());
    let mut converged = true;
    for class in 0..train.class_count() {
        let y: Vec<f64> = train
            .labels()
            .iter()
            .map(|&l| if l == class { 1.0 } else { -1.0 })
            .collect();
        let outcome = newton_mode(&kernel, &y, n)?;
        converged &= outcome.binary.converged;
        classes.push(outcome.binary);
    }
    Ok(GpModel {
        train_inputs: train.features().to_vec(),
        length_scale,
        classes,
        feature_count: train.feature_count(),
        class_count: train.class_count(),
        converged,
    })
}
