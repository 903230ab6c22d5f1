//! Multinomial logistic regression fitted by Newton iterations whose linear
//! systems are solved with conjugate gradient on Hessian-vector products.
//!
//! The objective is the summed multinomial cross-entropy plus an L2 penalty
//! `(lambda / 2) * ||W||^2` on the weights; biases are unpenalized. The
//! softmax Hessian is positive semi-definite, so CG needs no explicit
//! Hessian and a curvature guard suffices.

use serde::{Deserialize, Serialize};

use super::{softmax, TrainSet};

/// A fitted multinomial logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    /// Row-major `C x F` weight matrix.
    weights: Vec<f64>,
    bias: Vec<f64>,
    feature_count: usize,
    class_count: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl LogRegModel {
    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    fn scores(&self, row: &[f64]) -> Vec<f64> {
        (0..self.class_count)
            .map(|c| {
                let w = &self.weights[c * self.feature_count..(c + 1) * self.feature_count];
                self.bias[c] + w.iter().zip(row).map(|(&wi, &xi)| wi * xi).sum::<f64>()
            })
            .collect()
    }

    /// `softmax(W x + b)`.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        softmax(&self.scores(row))
    }
}

/// Parameters packed as `[W (C*F), b (C)]`.
struct Packed<'a> {
    train: &'a TrainSet,
    lambda: f64,
    class_count: usize,
    feature_count: usize,
}

impl Packed<'_> {
    fn dim(&self) -> usize {
        self.class_count * self.feature_count + self.class_count
    }

    fn scores(&self, theta: &[f64], row: &[f64]) -> Vec<f64> {
        let f = self.feature_count;
        let bias_at = self.class_count * f;
        (0..self.class_count)
            .map(|c| {
                let w = &theta[c * f..(c + 1) * f];
                theta[bias_at + c] + w.iter().zip(row).map(|(&wi, &xi)| wi * xi).sum::<f64>()
            })
            .collect()
    }

    /// Loss, gradient, and per-sample probabilities at `theta`.
    fn eval(&self, theta: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
        let f = self.feature_count;
        let bias_at = self.class_count * f;
        let mut grad = vec![0.0; self.dim()];
        let mut loss = 0.0;
        let mut probs = Vec::with_capacity(self.train.len());
        for (row, &label) in self.train.features().iter().zip(self.train.labels()) {
            let scores = self.scores(theta, row);
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let log_z = max
                + scores
                    .iter()
                    .map(|s| (s - max).exp())
                    .sum::<f64>()
                    .ln();
            loss -= scores[label] - log_z;
            let p: Vec<f64> = scores.iter().map(|s| (s - log_z).exp()).collect();
            for c in 0..self.class_count {
                let residual = p[c] - f64::from(c == label);
                let w_row = &mut grad[c * f..(c + 1) * f];
                for (g, &x) in w_row.iter_mut().zip(row) {
                    *g += residual * x;
                }
                grad[bias_at + c] += residual;
            }
            probs.push(p);
        }
        for i in 0..bias_at {
            loss += 0.5 * self.lambda * theta[i] * theta[i];
            grad[i] += self.lambda * theta[i];
        }
        (loss, grad, probs)
    }

    fn loss_only(&self, theta: &[f64]) -> f64 {
        let bias_at = self.class_count * self.feature_count;
        let mut loss = 0.0;
        for (row, &label) in self.train.features().iter().zip(self.train.labels()) {
            let scores = self.scores(theta, row);
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let log_z = max
                + scores
                    .iter()
                    .map(|s| (s - max).exp())
                    .sum::<f64>()
                    .ln();
            loss -= scores[label] - log_z;
        }
        for i in 0..bias_at {
            loss += 0.5 * self.lambda * theta[i] * theta[i];
        }
        loss
    }

    /// Hessian-vector product at the point whose probabilities are `probs`.
    fn hvp(&self, probs: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
        let f = self.feature_count;
        let bias_at = self.class_count * f;
        let mut out = vec![0.0; self.dim()];
        for (row, p) in self.train.features().iter().zip(probs) {
            // u = V x + v_b, then D = p .* u - p * (p . u).
            let mut u = vec![0.0; self.class_count];
            for (c, u_c) in u.iter_mut().enumerate() {
                let w = &v[c * f..(c + 1) * f];
                *u_c = v[bias_at + c] + w.iter().zip(row).map(|(&wi, &xi)| wi * xi).sum::<f64>();
            }
            let pu: f64 = p.iter().zip(&u).map(|(&pc, &uc)| pc * uc).sum();
            for c in 0..self.class_count {
                let d = p[c] * (u[c] - pu);
                let w_row = &mut out[c * f..(c + 1) * f];
                for (o, &x) in w_row.iter_mut().zip(row) {
                    *o += d * x;
                }
                out[bias_at + c] += d;
            }
        }
        for i in 0..bias_at {
            out[i] += self.lambda * v[i];
        }
        out
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, &x| acc.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Conjugate gradient for `H d = -g`, matrix-free. Stops on the usual
/// inexact-Newton forcing tolerance or on non-positive curvature.
fn cg_solve(packed: &Packed, probs: &[Vec<f64>], grad: &[f64]) -> Vec<f64> {
    let dim = grad.len();
    let g_norm = dot(grad, grad).sqrt();
    let tol = (g_norm.sqrt().min(0.5) * g_norm).max(1e-14);
    let mut d = vec![0.0; dim];
    let mut r: Vec<f64> = grad.iter().map(|&g| -g).collect();
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    for _ in 0..2 * dim {
        if rs.sqrt() <= tol {
            break;
        }
        let hp = packed.hvp(probs, &p);
        let curvature = dot(&p, &hp);
        if curvature <= 1e-16 {
            // Direction of (numerically) zero curvature: fall back to the
            // progress made so far, or steepest descent from scratch.
            if d.iter().all(|&x| x == 0.0) {
                return grad.iter().map(|&g| -g).collect();
            }
            break;
        }
        let alpha = rs / curvature;
        for i in 0..dim {
            d[i] += alpha * p[i];
            r[i] -= alpha * hp[i];
        }
        let rs_next = dot(&r, &r);
        let beta = rs_next / rs;
        for i in 0..dim {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_next;
    }
    d
}

/// Fits by Newton-CG; terminates when the gradient infinity-norm drops
/// below `tol` or after `max_iter` Newton steps. On non-convergence the
/// best iterate seen is returned with `converged = false`.
pub fn fit_logistic_regression(
    train: &TrainSet,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> LogRegModel {
    let packed = Packed {
        train,
        lambda,
        class_count: train.class_count(),
        feature_count: train.feature_count(),
    };
    let dim = packed.dim();
    let mut theta = vec![0.0; dim];
    let mut best_theta = theta.clone();
    let mut best_loss = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..max_iter {
        iterations = iter;
        let (loss, grad, probs) = packed.eval(&theta);
        if loss < best_loss {
            best_loss = loss;
            best_theta.copy_from_slice(&theta);
        }
        if inf_norm(&grad) < tol {
            converged = true;
            break;
        }
        let mut direction = cg_solve(&packed, &probs, &grad);
        let mut slope = dot(&grad, &direction);
        if slope >= 0.0 {
            direction = grad.iter().map(|&g| -g).collect();
            slope = dot(&grad, &direction);
        }
        // Backtracking Armijo line search.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate: Vec<f64> = theta
                .iter()
                .zip(&direction)
                .map(|(&t, &d)| t + step * d)
                .collect();
            if packed.loss_only(&candidate) <= loss + 1e-4 * step * slope {
                theta = candidate;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break; // no descent possible at float precision
        }
    }

    if !converged {
        let (loss, grad, _) = packed.eval(&theta);
        if inf_norm(&grad) < tol {
            converged = true;
        }
        if loss < best_loss {
            best_theta.copy_from_slice(&theta);
        }
        theta = best_theta;
    }

    let bias_at = packed.class_count * packed.feature_count;
    LogRegModel {
        weights: theta[..bias_at].to_vec(),
        bias: theta[bias_at..].to_vec(),
        feature_count: packed.feature_count,
        class_count: packed.class_count,
        converged,
        iterations,
    }
}
