use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_both_classes, check_dimension, check_threshold, label_for, Classifier, ModelError, Prediction};
use crate::corpus::Label;
use crate::textfeat::FeatureMatrix;

/// L2-penalized logistic regression. The intercept is not penalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub threshold: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            lambda: 1e-4,
            max_iter: 200,
            tol: 1e-8,
            threshold: 0.5,
        }
    }
}

/// A fitted model plus the objective value after every accepted iteration
/// (the first entry is the objective at the zero start).
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub model: LogisticModel,
    pub trace: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn linear(weights: &[f64], intercept: f64, row: &[bool]) -> f64 {
    intercept
        + row
            .iter()
            .zip(weights)
            .filter(|(v, _)| **v)
            .map(|(_, w)| w)
            .sum::<f64>()
}

fn target(label: Label) -> f64 {
    if label.is_spam() { 1.0 } else { 0.0 }
}

/// Penalized negative log-likelihood:
/// `-sum[y log p + (1 - y) log(1 - p)] + lambda/2 * |w|^2`.
pub fn penalized_nll(weights: &[f64], intercept: f64, matrix: &FeatureMatrix, lambda: f64) -> f64 {
    let data: f64 = matrix
        .rows
        .iter()
        .zip(&matrix.labels)
        .map(|(row, &label)| {
            let z = linear(weights, intercept, row);
            softplus(z) - target(label) * z
        })
        .sum();
    data + 0.5 * lambda * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Gradient of [`penalized_nll`] with respect to `(weights, intercept)`.
pub fn nll_gradient(weights: &[f64], intercept: f64, matrix: &FeatureMatrix, lambda: f64) -> (Vec<f64>, f64) {
    let mut grad: Vec<f64> = weights.iter().map(|w| lambda * w).collect();
    let mut grad_b = 0.0;
    for (row, &label) in matrix.rows.iter().zip(&matrix.labels) {
        let r = sigmoid(linear(weights, intercept, row)) - target(label);
        grad_b += r;
        for (g, _) in grad.iter_mut().zip(row).filter(|(_, v)| **v) {
            *g += r;
        }
    }
    (grad, grad_b)
}

// Parameters are packed as [intercept, w_1, ..., w_p].
fn hessian(theta: &DVector<f64>, matrix: &FeatureMatrix, lambda: f64) -> DMatrix<f64> {
    let dim = theta.len();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for j in 1..dim {
        h[(j, j)] = lambda;
    }
    let weights = &theta.as_slice()[1..];
    let mut active = Vec::with_capacity(dim);
    for row in &matrix.rows {
        let p = sigmoid(linear(weights, theta[0], row));
        let w = p * (1.0 - p);
        active.clear();
        active.push(0);
        active.extend(row.iter().enumerate().filter(|(_, v)| **v).map(|(j, _)| j + 1));
        for &a in &active {
            for &b in &active {
                h[(a, b)] += w;
            }
        }
    }
    h
}

fn objective(theta: &DVector<f64>, matrix: &FeatureMatrix, lambda: f64) -> f64 {
    penalized_nll(&theta.as_slice()[1..], theta[0], matrix, lambda)
}

fn gradient(theta: &DVector<f64>, matrix: &FeatureMatrix, lambda: f64) -> DVector<f64> {
    let (g, gb) = nll_gradient(&theta.as_slice()[1..], theta[0], matrix, lambda);
    DVector::from_iterator(theta.len(), std::iter::once(gb).chain(g))
}

const MAX_HALVINGS: usize = 60;

/// Fits by damped Newton from zero. Each iteration tries the Newton direction
/// with step halving and falls back to the negative gradient when the Newton
/// direction is unavailable or does not decrease the objective. Stops when the
/// gradient's infinity norm drops below `tol` or after `max_iter` iterations.
pub fn fit_logistic(matrix: &FeatureMatrix, config: &LogisticConfig) -> Result<LogisticFit, ModelError> {
    if !(config.lambda > 0.0 && config.lambda.is_finite()) {
        return Err(ModelError::BadHyperparameter(format!(
            "lambda {} must be positive",
            config.lambda
        )));
    }
    if !(config.tol > 0.0) {
        return Err(ModelError::BadHyperparameter("tol must be positive".into()));
    }
    check_threshold(config.threshold)?;
    check_both_classes(matrix)?;
    if matrix.n_features() == 0 {
        return Err(ModelError::ZeroFeatures);
    }

    let lambda = config.lambda;
    let mut theta = DVector::<f64>::zeros(matrix.n_features() + 1);
    let mut value = objective(&theta, matrix, lambda);
    let mut trace = vec![value];
    let mut iterations = 0;
    let mut converged = false;

    loop {
        let grad = gradient(&theta, matrix, lambda);
        if !grad.iter().all(|g| g.is_finite()) {
            return Err(ModelError::NonFinite("gradient".into()));
        }
        if grad.amax() < config.tol {
            converged = true;
            break;
        }
        if iterations >= config.max_iter {
            break;
        }

        let newton = hessian(&theta, matrix, lambda)
            .cholesky()
            .map(|chol| -chol.solve(&grad))
            .filter(|d| d.iter().all(|x| x.is_finite()));
        let steepest = -&grad;
        let accepted = newton
            .iter()
            .chain(std::iter::once(&steepest))
            .find_map(|direction| line_search(&theta, direction, value, matrix, lambda));

        let Some((next, next_value)) = accepted else {
            // No direction decreases the objective any further at f64 precision.
            break;
        };
        if !next_value.is_finite() || !next.iter().all(|x| x.is_finite()) {
            return Err(ModelError::NonFinite("parameters".into()));
        }
        theta = next;
        value = next_value;
        trace.push(value);
        iterations += 1;
    }

    Ok(LogisticFit {
        model: LogisticModel {
            weights: theta.as_slice()[1..].to_vec(),
            intercept: theta[0],
            lambda,
            converged,
            iterations,
            threshold: config.threshold,
        },
        trace,
    })
}

fn line_search(
    theta: &DVector<f64>,
    direction: &DVector<f64>,
    value: f64,
    matrix: &FeatureMatrix,
    lambda: f64,
) -> Option<(DVector<f64>, f64)> {
    let mut step = 1.0;
    for _ in 0..MAX_HALVINGS {
        let candidate = theta + direction * step;
        let candidate_value = objective(&candidate, matrix, lambda);
        if candidate_value <= value && candidate != *theta {
            return Some((candidate, candidate_value));
        }
        step *= 0.5;
    }
    None
}

impl LogisticModel {
    pub fn probability(&self, x: &[bool]) -> Result<f64, ModelError> {
        check_dimension(self.weights.len(), x)?;
        Ok(sigmoid(linear(&self.weights, self.intercept, x)))
    }
}

impl Classifier for LogisticModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict(&self, x: &[bool]) -> Result<Prediction, ModelError> {
        let score = self.probability(x)?;
        Ok(Prediction {
            label: label_for(score, self.threshold),
            score,
        })
    }
}
