//! Multinomial softmax regression with L2 weight decay, fit by gradient
//! descent with step halving.
//!
//! Classes are indexed from 0. Parameters form a `k × (d + 1)` matrix whose
//! last column is the intercept; the decay term skips it.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::math::{all_finite, log_sum_exp};
use crate::matrix::{dot, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxParams {
    /// `k × (d + 1)`, intercept in the last column.
    pub theta: Matrix,
    /// Weight-decay strength λ.
    pub lambda: f64,
}

impl SoftmaxParams {
    pub fn zeros(classes: usize, features: usize, lambda: f64) -> Self {
        SoftmaxParams {
            theta: Matrix::zeros(classes, features + 1),
            lambda,
        }
    }

    pub fn new(theta: Matrix, lambda: f64) -> Result<Self> {
        let params = SoftmaxParams { theta, lambda };
        params.validate()?;
        Ok(params)
    }

    pub fn classes(&self) -> usize {
        self.theta.rows()
    }

    /// Feature dimension d (excluding the intercept).
    pub fn features(&self) -> usize {
        self.theta.cols().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.rows() < 2 {
            return Err(Error::InvalidConfig("softmax needs at least two classes".into()));
        }
        if self.theta.cols() == 0 {
            return Err(Error::InvalidConfig(
                "softmax parameters need an intercept column".into(),
            ));
        }
        if !self.theta.is_finite() {
            return Err(Error::NonFinite("softmax parameters"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig("weight decay must be non-negative".into()));
        }
        Ok(())
    }

    /// θⱼᵀ[x; 1] for every class.
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.features();
        check_len("feature vector", d, x.len())?;
        if !all_finite(x) {
            return Err(Error::NonFinite("feature vector"));
        }
        Ok((0..self.classes())
            .map(|j| {
                let row = self.theta.row(j);
                dot(&row[..d], x) + row[d]
            })
            .collect())
    }

    /// log p(y = j | x) for every class.
    pub fn log_probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        let logits = self.logits(x)?;
        let lse = log_sum_exp(&logits);
        Ok(logits.iter().map(|z| z - lse).collect())
    }

    /// Class probabilities; they sum to one.
    pub fn hypothesis(&self, x: &[f64]) -> Result<Vec<f64>> {
        let logits = self.logits(x)?;
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| libm::exp(z - max)).collect();
        let sum: f64 = exps.iter().sum();
        Ok(exps.into_iter().map(|e| e / sum).collect())
    }

    /// Most probable class; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let logits = self.logits(x)?;
        let mut best = 0;
        for (j, &z) in logits.iter().enumerate().skip(1) {
            if z > logits[best] {
                best = j;
            }
        }
        Ok(best)
    }

    /// (λ/2) Σ θᵢⱼ² over the non-intercept entries.
    pub fn decay_term(&self) -> f64 {
        let d = self.features();
        let sq: f64 = (0..self.classes())
            .map(|j| self.theta.row(j)[..d].iter().map(|t| t * t).sum::<f64>())
            .sum();
        0.5 * self.lambda * sq
    }
}

/// Features (m × d) with a class index per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    features: Matrix,
    labels: Vec<usize>,
    classes: usize,
}

impl LabeledSet {
    pub fn new(features: Matrix, labels: Vec<usize>, classes: usize) -> Result<Self> {
        check_len("label count", features.rows(), labels.len())?;
        if classes < 2 {
            return Err(Error::InvalidConfig("softmax needs at least two classes".into()));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        if !features.is_finite() {
            return Err(Error::NonFinite("features"));
        }
        Ok(LabeledSet {
            features,
            labels,
            classes,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>, classes: usize) -> Result<Self> {
        LabeledSet::new(Matrix::from_rows(rows)?, labels, classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn example(&self, i: usize) -> (&[f64], usize) {
        (self.features.row(i), self.labels[i])
    }
}

fn check_compatible(data: &LabeledSet, params: &SoftmaxParams) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Empty("labeled set"));
    }
    check_len("class count", params.classes(), data.classes())?;
    check_len("feature dimension", params.features(), data.dim())
}

/// J(θ) = −(1/m) Σᵢ log p(y⁽ⁱ⁾ | x⁽ⁱ⁾) + (λ/2) Σ θ², intercept excluded from
/// the decay.
pub fn cost(data: &LabeledSet, params: &SoftmaxParams) -> Result<f64> {
    check_compatible(data, params)?;
    let mut nll = 0.0;
    for i in 0..data.len() {
        let (x, y) = data.example(i);
        nll -= params.log_probabilities(x)?[y];
    }
    Ok(nll / data.len() as f64 + params.decay_term())
}

/// Analytic gradient of [`cost`], same shape as θ.
pub fn gradient(data: &LabeledSet, params: &SoftmaxParams) -> Result<Matrix> {
    check_compatible(data, params)?;
    let (k, d) = (params.classes(), params.features());
    let mut grad = Matrix::zeros(k, d + 1);
    let scale = -1.0 / data.len() as f64;
    for i in 0..data.len() {
        let (x, y) = data.example(i);
        let probs = params.hypothesis(x)?;
        for (j, p) in probs.iter().enumerate() {
            let coeff = scale * (if j == y { 1.0 } else { 0.0 } - p);
            let row = grad.row_mut(j);
            for (g, xl) in row[..d].iter_mut().zip(x) {
                *g += coeff * xl;
            }
            row[d] += coeff;
        }
    }
    for j in 0..k {
        let theta = params.theta.row(j);
        for (g, t) in grad.row_mut(j)[..d].iter_mut().zip(&theta[..d]) {
            *g += params.lambda * t;
        }
    }
    Ok(grad)
}

/// Gradient-descent settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxConfig {
    pub lambda: f64,
    /// Initial step α; halved whenever a step would increase the cost.
    pub step: f64,
    pub iters: usize,
}

impl Default for SoftmaxConfig {
    fn default() -> Self {
        SoftmaxConfig {
            lambda: 1e-4,
            step: 0.5,
            iters: 500,
        }
    }
}

impl SoftmaxConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidConfig("step size must be positive".into()));
        }
        if self.iters == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig("weight decay must be non-negative".into()));
        }
        Ok(())
    }
}

/// Fitted parameters and the cost before the first and after every
/// accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxFit {
    pub params: SoftmaxParams,
    pub cost_trace: Vec<f64>,
}

const MIN_STEP: f64 = 1e-20;

/// Gradient descent from θ = 0.
pub fn train_softmax(data: &LabeledSet, cfg: &SoftmaxConfig) -> Result<SoftmaxFit> {
    let init = SoftmaxParams::zeros(data.classes(), data.dim(), cfg.lambda);
    train_softmax_from(data, init.theta, cfg)
}

/// Gradient descent from a given θ. The cost trace never increases.
pub fn train_softmax_from(data: &LabeledSet, theta: Matrix, cfg: &SoftmaxConfig) -> Result<SoftmaxFit> {
    cfg.validate()?;
    let mut params = SoftmaxParams::new(theta, cfg.lambda)?;
    let mut current = cost(data, &params)?;
    let mut trace = vec![current];
    let mut step = cfg.step;

    'descent: for _ in 0..cfg.iters {
        let grad = gradient(data, &params)?;
        if grad.max_abs() == 0.0 {
            break;
        }
        loop {
            let mut candidate = params.clone();
            for (t, g) in candidate.theta.as_mut_slice().iter_mut().zip(grad.as_slice()) {
                *t -= step * g;
            }
            let next = cost(data, &candidate)?;
            if next <= current {
                params = candidate;
                current = next;
                trace.push(current);
                break;
            }
            step *= 0.5;
            if step < MIN_STEP {
                break 'descent;
            }
        }
    }
    Ok(SoftmaxFit {
        params,
        cost_trace: trace,
    })
}

/// Fraction of rows whose predicted class equals the label.
pub fn accuracy(data: &LabeledSet, params: &SoftmaxParams) -> Result<f64> {
    check_compatible(data, params)?;
    let mut correct = 0;
    for i in 0..data.len() {
        let (x, y) = data.example(i);
        if params.predict(x)? == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}
