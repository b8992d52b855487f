//! Logistic regression trained by full-batch gradient descent, and the
//! AUC used to score it.

mod auc;

pub use auc::auc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;

/// Step halvings allowed within one iteration before training stops.
const MAX_HALVINGS: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("training data has no rows")]
    Empty,
    #[error("non-finite loss or gradient at iteration {iteration}; check feature scaling")]
    NonFinite { iteration: usize },
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("NaN score")]
    NanScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop once the gradient's infinity norm drops below this.
    pub tolerance: f64,
    /// L2 penalty on the coefficients (not the intercept).
    #[serde(default)]
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_iters: 100,
            tolerance: 1e-6,
            l2: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LRModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub train_config: TrainConfig,
}

impl LRModel {
    pub fn zeros(n_features: usize, train_config: TrainConfig) -> Self {
        Self {
            coefficients: vec![0.0; n_features],
            intercept: 0.0,
            train_config,
        }
    }
}

/// A trained model with the loss at every accepted iterate, starting from
/// the zero model.
#[derive(Debug, Clone)]
pub struct LrFit {
    pub model: LRModel,
    pub losses: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Gradient of the penalized mean negative log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: f64,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LossGradient {
    fn inf_norm(&self) -> f64 {
        self.coefficients
            .iter()
            .fold(self.intercept.abs(), |m, g| m.max(g.abs()))
    }

    fn is_finite(&self) -> bool {
        self.loss.is_finite()
            && self.intercept.is_finite()
            && self.coefficients.iter().all(|g| g.is_finite())
    }
}

/// Loss and gradient over row-major `values` (`d` columns).
fn loss_gradient_dense(
    values: &[f64],
    labels: &[u8],
    coefficients: &[f64],
    intercept: f64,
    l2: f64,
) -> LossGradient {
    let d = coefficients.len();
    let n = labels.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; d];
    let mut grad_b = 0.0;
    for (row, &y) in values.chunks_exact(d).zip(labels) {
        let z = intercept + row.iter().zip(coefficients).map(|(x, w)| x * w).sum::<f64>();
        let y = f64::from(y);
        loss += softplus(z) - y * z;
        let r = sigmoid(z) - y;
        grad_b += r;
        for (g, x) in grad.iter_mut().zip(row) {
            *g += r * x;
        }
    }
    let penalty = 0.5 * l2 * coefficients.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in grad.iter_mut().zip(coefficients) {
        *g = *g / n + l2 * w;
    }
    LossGradient {
        loss: loss / n + penalty,
        coefficients: grad,
        intercept: grad_b / n,
    }
}

pub fn loss_and_gradient(
    ds: &Dataset,
    coefficients: &[f64],
    intercept: f64,
    l2: f64,
) -> Result<LossGradient, ClassifierError> {
    if coefficients.len() != ds.n_features() {
        return Err(ClassifierError::LengthMismatch {
            expected: ds.n_features(),
            found: coefficients.len(),
        });
    }
    let dense;
    let values = match ds.dense_values() {
        Some(v) => v,
        None => {
            dense = ds.to_dense();
            dense.dense_values().expect("dense")
        }
    };
    Ok(loss_gradient_dense(values, ds.labels(), coefficients, intercept, l2))
}

/// Gradient descent from the zero model. Each iteration tries a full step
/// and halves it (up to 20 times) until the loss does not increase; if no
/// such step exists training stops, so recorded losses never increase.
pub fn fit_lr(ds: &Dataset, config: &TrainConfig) -> Result<LrFit, ClassifierError> {
    if ds.n_rows() == 0 {
        return Err(ClassifierError::Empty);
    }
    if !ds.has_both_classes() {
        return Err(ClassifierError::SingleClass);
    }
    let dense;
    let values = match ds.dense_values() {
        Some(v) => v,
        None => {
            dense = ds.to_dense();
            dense.dense_values().expect("dense")
        }
    };
    let labels = ds.labels();
    let d = ds.n_features();

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut current = loss_gradient_dense(values, labels, &w, b, config.l2);
    if !current.is_finite() {
        return Err(ClassifierError::NonFinite { iteration: 0 });
    }
    let mut losses = vec![current.loss];

    for iteration in 1..=config.max_iters {
        if current.inf_norm() < config.tolerance {
            break;
        }
        let mut step = config.learning_rate;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand_w: Vec<f64> = w
                .iter()
                .zip(&current.coefficients)
                .map(|(wi, gi)| wi - step * gi)
                .collect();
            let cand_b = b - step * current.intercept;
            let cand = loss_gradient_dense(values, labels, &cand_w, cand_b, config.l2);
            if !cand.is_finite() {
                return Err(ClassifierError::NonFinite { iteration });
            }
            if cand.loss <= current.loss {
                accepted = Some((cand_w, cand_b, cand));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((nw, nb, next)) => {
                w = nw;
                b = nb;
                current = next;
                losses.push(current.loss);
            }
            None => break,
        }
    }

    Ok(LrFit {
        model: LRModel {
            coefficients: w,
            intercept: b,
            train_config: *config,
        },
        losses,
    })
}

pub fn train_lr(ds: &Dataset, config: &TrainConfig) -> Result<LRModel, ClassifierError> {
    fit_lr(ds, config).map(|fit| fit.model)
}

/// `sigmoid(intercept + x . coefficients)` for every row.
pub fn predict_scores(model: &LRModel, ds: &Dataset) -> Result<Vec<f64>, ClassifierError> {
    let d = ds.n_features();
    if model.coefficients.len() != d {
        return Err(ClassifierError::LengthMismatch {
            expected: d,
            found: model.coefficients.len(),
        });
    }
    let linear = |row: &[f64]| {
        model.intercept
            + row
                .iter()
                .zip(&model.coefficients)
                .map(|(x, w)| x * w)
                .sum::<f64>()
    };
    Ok(match ds.dense_values() {
        Some(values) => values.chunks_exact(d).map(|r| sigmoid(linear(r))).collect(),
        None => (0..ds.n_rows()).map(|r| sigmoid(linear(&ds.row(r)))).collect(),
    })
}
