use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::{FeatureMatrix, SparseRow};
use crate::error::{Error, Result};
use crate::seeding::rng;

pub const GAP_TOLERANCE: f64 = 1e-4;
pub const MAX_EPOCHS: usize = 1000;

/// One-vs-rest linear SVM. Classes are sorted, so the first maximum of the
/// decision values is also the lexicographically smallest author.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub classes: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub c: f64,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, |w| w.len())
    }

    pub fn decision_values(&self, row: &SparseRow) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| sparse_dot(w, row) + b)
            .collect()
    }

    pub fn predict_index(&self, row: &SparseRow) -> usize {
        let scores = self.decision_values(row);
        let mut best = 0;
        for (k, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = k;
            }
        }
        best
    }

    pub fn predict(&self, row: &SparseRow) -> &str {
        &self.classes[self.predict_index(row)]
    }
}

fn sparse_dot(w: &[f64], row: &SparseRow) -> f64 {
    row.iter().map(|&(i, v)| w[i as usize] * v).sum()
}

/// Result of one binary dual coordinate descent run.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epochs: usize,
    pub gap: f64,
}

/// Row-major `n x n` matrix of `x_i . x_j + 1`, the inner products of the
/// bias-augmented rows.
pub fn augmented_gram(rows: &[SparseRow], dim: usize) -> Vec<f64> {
    let n = rows.len();
    let mut gram = vec![0.0; n * n];
    let mut dense = vec![0.0; dim];
    for i in 0..n {
        for &(j, v) in &rows[i] {
            dense[j as usize] = v;
        }
        for k in i..n {
            let value = sparse_dot(&dense, &rows[k]) + 1.0;
            gram[i * n + k] = value;
            gram[k * n + i] = value;
        }
        for &(j, _) in &rows[i] {
            dense[j as usize] = 0.0;
        }
    }
    gram
}

/// Minimize `0.5 |w|^2 + C sum max(0, 1 - y (w.x + b))` over the augmented
/// vector `(w, b)`, by coordinate descent on the dual.
pub fn train_binary(rows: &[SparseRow], y: &[f64], dim: usize, c: f64, seed: u64) -> BinarySvm {
    train_binary_gram(rows, &augmented_gram(rows, dim), y, dim, c, seed)
}

/// As [`train_binary`] with a precomputed [`augmented_gram`].
pub fn train_binary_gram(rows: &[SparseRow], gram: &[f64], y: &[f64], dim: usize, c: f64, seed: u64) -> BinarySvm {
    let n = rows.len();
    let k = |i: usize, j: usize| gram[i * n + j];
    let mut alpha = vec![0.0; n];
    // margins[i] = w.x_i + b for the current alpha
    let mut margins = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng(seed);
    let mut gap = f64::INFINITY;
    let mut epochs = 0;
    while epochs < MAX_EPOCHS {
        epochs += 1;
        order.shuffle(&mut rng);
        for &i in &order {
            let g = y[i] * margins[i] - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / k(i, i)).clamp(0.0, c);
                let delta = (alpha[i] - old) * y[i];
                if delta != 0.0 {
                    for (j, m) in margins.iter_mut().enumerate() {
                        *m += delta * k(i, j);
                    }
                }
            }
        }
        for (j, m) in margins.iter_mut().enumerate() {
            *m = (0..n).map(|i| alpha[i] * y[i] * k(i, j)).sum();
        }
        let norm2: f64 = (0..n).map(|i| alpha[i] * y[i] * margins[i]).sum();
        let hinge: f64 = (0..n).map(|i| (1.0 - y[i] * margins[i]).max(0.0)).sum();
        let primal = 0.5 * norm2 + c * hinge;
        let dual = alpha.iter().sum::<f64>() - 0.5 * norm2;
        gap = primal - dual;
        if gap <= GAP_TOLERANCE {
            break;
        }
    }
    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    for i in 0..n {
        let coef = alpha[i] * y[i];
        if coef != 0.0 {
            for &(j, v) in &rows[i] {
                weights[j as usize] += coef * v;
            }
            bias += coef;
        }
    }
    BinarySvm {
        weights,
        bias,
        epochs,
        gap,
    }
}

pub fn train_svm(x: &FeatureMatrix, c: f64, seed: u64) -> Result<SvmModel> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C must be positive, got {c}")));
    }
    let mut classes: Vec<String> = x.labels.clone();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass(classes.len()));
    }
    let gram = augmented_gram(&x.rows, x.dim);
    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    for class in &classes {
        let y: Vec<f64> = x.labels.iter().map(|l| if l == class { 1.0 } else { -1.0 }).collect();
        let fit = train_binary_gram(&x.rows, &gram, &y, x.dim, c, seed);
        if !fit.weights.iter().all(|v| v.is_finite()) || !fit.bias.is_finite() {
            return Err(Error::Numeric(format!("non-finite SVM weights for class {class}")));
        }
        weights.push(fit.weights);
        biases.push(fit.bias);
    }
    Ok(SvmModel {
        classes,
        weights,
        biases,
        c,
    })
}
