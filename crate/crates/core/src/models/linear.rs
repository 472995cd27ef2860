//! Logistic regression and linear SVM trained by full-batch (sub)gradient
//! descent on their standard convex losses.

use serde::{Deserialize, Serialize};

/// Weights and bias of one binary linear scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Euclidean norm of the loss gradient at the last epoch.
    pub final_grad_norm: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Mean log-loss plus an L2 penalty `l2/2 * ||w||^2` (bias unpenalized).
pub fn logistic_loss(x: &[Vec<f64>], y: &[f64], w: &[f64], b: f64, l2: f64) -> f64 {
    let n = x.len() as f64;
    let mut loss = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let z = dot(w, xi) + b;
        // log(1 + exp(-z)) computed stably
        let log1pe = if z > 0.0 { (-z).exp().ln_1p() } else { -z + z.exp().ln_1p() };
        loss += if yi > 0.5 { log1pe } else { z + log1pe };
    }
    loss / n + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Gradient of [`logistic_loss`] with respect to (w, b).
pub fn logistic_gradient(
    x: &[Vec<f64>],
    y: &[f64],
    w: &[f64],
    b: f64,
    l2: f64,
) -> (Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut grad_w = vec![0.0; w.len()];
    let mut grad_b = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let err = sigmoid(dot(w, xi) + b) - yi;
        for (g, &v) in grad_w.iter_mut().zip(xi) {
            *g += err * v;
        }
        grad_b += err;
    }
    for (g, &wv) in grad_w.iter_mut().zip(w) {
        *g = *g / n + l2 * wv;
    }
    (grad_w, grad_b / n)
}

/// Full-batch gradient descent on the logistic loss. Stops when the
/// gradient norm drops below `tol` or after `epochs` passes.
pub fn fit_logistic(
    x: &[Vec<f64>],
    y: &[f64],
    learning_rate: f64,
    l2: f64,
    epochs: usize,
    tol: f64,
) -> LinearModel {
    let dim = x.first().map(Vec::len).unwrap_or(0);
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut grad_norm = f64::INFINITY;
    for _ in 0..epochs {
        let (gw, gb) = logistic_gradient(x, y, &w, b, l2);
        grad_norm = (gw.iter().map(|v| v * v).sum::<f64>() + gb * gb).sqrt();
        if grad_norm <= tol {
            break;
        }
        for (wv, g) in w.iter_mut().zip(&gw) {
            *wv -= learning_rate * g;
        }
        b -= learning_rate * gb;
    }
    LinearModel {
        weights: w,
        bias: b,
        final_grad_norm: grad_norm,
    }
}

/// Regularized mean hinge loss:
/// `||w||^2 / (2 C n) + mean_i max(0, 1 - y_i (w.x_i + b))`, y in {-1, +1}.
pub fn svm_objective(x: &[Vec<f64>], y_signed: &[f64], w: &[f64], b: f64, c_margin: f64) -> f64 {
    let n = x.len() as f64;
    let hinge: f64 = x
        .iter()
        .zip(y_signed)
        .map(|(xi, &yi)| (1.0 - yi * (dot(w, xi) + b)).max(0.0))
        .sum::<f64>()
        / n;
    hinge + w.iter().map(|v| v * v).sum::<f64>() / (2.0 * c_margin * n)
}

/// Full-batch subgradient descent on [`svm_objective`].
pub fn fit_svm(
    x: &[Vec<f64>],
    y_signed: &[f64],
    learning_rate: f64,
    c_margin: f64,
    epochs: usize,
    tol: f64,
) -> LinearModel {
    let dim = x.first().map(Vec::len).unwrap_or(0);
    let n = x.len() as f64;
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut grad_norm = f64::INFINITY;
    for _ in 0..epochs {
        let mut gw: Vec<f64> = w.iter().map(|&wv| wv / (c_margin * n)).collect();
        let mut gb = 0.0;
        for (xi, &yi) in x.iter().zip(y_signed) {
            if yi * (dot(&w, xi) + b) < 1.0 {
                for (g, &v) in gw.iter_mut().zip(xi) {
                    *g -= yi * v / n;
                }
                gb -= yi / n;
            }
        }
        grad_norm = (gw.iter().map(|v| v * v).sum::<f64>() + gb * gb).sqrt();
        if grad_norm <= tol {
            break;
        }
        for (wv, g) in w.iter_mut().zip(&gw) {
            *wv -= learning_rate * g;
        }
        b -= learning_rate * gb;
    }
    LinearModel {
        weights: w,
        bias: b,
        final_grad_norm: grad_norm,
    }
}

impl LinearModel {
    pub fn margin(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }
}
