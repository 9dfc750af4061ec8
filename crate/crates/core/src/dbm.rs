//! Two-hidden-layer deep Boltzmann machine trained greedily, one RBM at a time.
//!
//! While each layer is trained on its own, the missing neighbour is stood in
//! for by doubling: the first layer sees twice the bottom-up input
//! (σ(2W₁ᵀv + c₁)) and the top layer sends twice the top-down input
//! (σ(2W₂h₂ + c₁)). Once both layers are trained, h₁ is recombined from both
//! sides with single weights, σ(W₁ᵀv + W₂h₂ + c₁).

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::math::{all_finite, log_sum_exp, sigmoid};
use crate::matrix::{dot, Matrix};
use crate::rbm::{self, binary_state, CdConfig, Coupling, RbmParams, TrainLog, ENUMERATION_LIMIT};

/// Alternating h₁/h₂ updates after the initial bottom-up pass.
pub const MEAN_FIELD_UPDATES: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct DbmParams {
    /// p_v × p_h1
    pub w1: Matrix,
    /// p_h1 × p_h2
    pub w2: Matrix,
    pub b: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

impl DbmParams {
    pub fn new(w1: Matrix, w2: Matrix, b: Vec<f64>, c1: Vec<f64>, c2: Vec<f64>) -> Result<Self> {
        let params = DbmParams { w1, w2, b, c1, c2 };
        params.validate()?;
        Ok(params)
    }

    pub fn zeros(visible: usize, hidden1: usize, hidden2: usize) -> Self {
        DbmParams {
            w1: Matrix::zeros(visible, hidden1),
            w2: Matrix::zeros(hidden1, hidden2),
            b: vec![0.0; visible],
            c1: vec![0.0; hidden1],
            c2: vec![0.0; hidden2],
        }
    }

    /// `(p_v, p_h1, p_h2)`.
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.w1.rows(), self.w1.cols(), self.w2.cols())
    }

    pub fn validate(&self) -> Result<()> {
        let (pv, ph1, _) = self.sizes();
        check_len("second-layer weight rows", ph1, self.w2.rows())?;
        check_len("visible bias", pv, self.b.len())?;
        check_len("first hidden bias", ph1, self.c1.len())?;
        check_len("second hidden bias", self.w2.cols(), self.c2.len())?;
        let finite = self.w1.is_finite()
            && self.w2.is_finite()
            && all_finite(&self.b)
            && all_finite(&self.c1)
            && all_finite(&self.c2);
        if !finite {
            return Err(Error::NonFinite("dbm parameters"));
        }
        Ok(())
    }

    /// The (v, h₁) machine: weights W₁, biases b and c₁.
    pub fn first_layer(&self) -> RbmParams {
        RbmParams {
            w: self.w1.clone(),
            b: self.b.clone(),
            c: self.c1.clone(),
        }
    }

    /// The (h₁, h₂) machine: weights W₂, biases c₁ and c₂.
    pub fn second_layer(&self) -> RbmParams {
        RbmParams {
            w: self.w2.clone(),
            b: self.c1.clone(),
            c: self.c2.clone(),
        }
    }

    /// E = −vᵀW₁h₁ − h₁ᵀW₂h₂ − bᵀv − c₁ᵀh₁ − c₂ᵀh₂.
    pub fn energy(&self, v: &[f64], h1: &[f64], h2: &[f64]) -> Result<f64> {
        let (pv, ph1, ph2) = self.sizes();
        check_len("visible state", pv, v.len())?;
        check_len("first hidden state", ph1, h1.len())?;
        check_len("second hidden state", ph2, h2.len())?;
        let w1h1 = self.w1.mul_vec(h1)?;
        let w2h2 = self.w2.mul_vec(h2)?;
        Ok(-dot(v, &w1h1) - dot(h1, &w2h2) - dot(&self.b, v) - dot(&self.c1, h1) - dot(&self.c2, h2))
    }

    /// p(h₁ | v) with the bottom-up input doubled: σ(2W₁ᵀv + c₁).
    pub fn doubled_prop_up_first(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("visible vector", self.w1.rows(), v.len())?;
        Ok(activate(self.w1.tr_mul_vec(v)?, 2.0, &self.c1))
    }

    /// p(v | h₁) = σ(W₁h₁ + b).
    pub fn prop_down_first(&self, h1: &[f64]) -> Result<Vec<f64>> {
        check_len("first hidden vector", self.w1.cols(), h1.len())?;
        Ok(activate(self.w1.mul_vec(h1)?, 1.0, &self.b))
    }

    /// p(h₁ | h₂) with the top-down input doubled: σ(2W₂h₂ + c₁).
    pub fn doubled_prop_down_second(&self, h2: &[f64]) -> Result<Vec<f64>> {
        check_len("second hidden vector", self.w2.cols(), h2.len())?;
        Ok(activate(self.w2.mul_vec(h2)?, 2.0, &self.c1))
    }

    /// p(h₂ | h₁) = σ(W₂ᵀh₁ + c₂).
    pub fn prop_up_second(&self, h1: &[f64]) -> Result<Vec<f64>> {
        check_len("first hidden vector", self.w2.rows(), h1.len())?;
        Ok(activate(self.w2.tr_mul_vec(h1)?, 1.0, &self.c2))
    }

    /// p(h₁ | v, h₂) = σ(W₁ᵀv + W₂h₂ + c₁).
    pub fn mean_field_h1(&self, v: &[f64], h2: &[f64]) -> Result<Vec<f64>> {
        check_len("visible vector", self.w1.rows(), v.len())?;
        check_len("second hidden vector", self.w2.cols(), h2.len())?;
        let up = self.w1.tr_mul_vec(v)?;
        let down = self.w2.mul_vec(h2)?;
        Ok(up
            .iter()
            .zip(&down)
            .zip(&self.c1)
            .map(|((u, d), c)| sigmoid(u + d + c))
            .collect())
    }

    /// Mean-field posterior `(h₁, h₂)`: a doubled bottom-up pass followed by
    /// [`MEAN_FIELD_UPDATES`] alternating updates of h₁ and h₂.
    pub fn infer(&self, v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut h1 = self.doubled_prop_up_first(v)?;
        let mut h2 = self.prop_up_second(&h1)?;
        for _ in 0..MEAN_FIELD_UPDATES {
            h1 = self.mean_field_h1(v, &h2)?;
            h2 = self.prop_up_second(&h1)?;
        }
        Ok((h1, h2))
    }

    /// Top-layer features for one input, length p_h2, each in (0, 1).
    pub fn extract_features(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.infer(v)?.1)
    }

    /// One down-pass from the inferred posterior: h₁ recombined from v and
    /// h₂, then p(v | h₁).
    pub fn reconstruct(&self, v: &[f64]) -> Result<Vec<f64>> {
        let (_, h2) = self.infer(v)?;
        let h1 = self.mean_field_h1(v, &h2)?;
        self.prop_down_first(&h1)
    }
}

fn activate(mut input: Vec<f64>, scale: f64, bias: &[f64]) -> Vec<f64> {
    for (x, c) in input.iter_mut().zip(bias) {
        *x = sigmoid(scale * *x + c);
    }
    input
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbmConfig {
    pub layer1: CdConfig,
    pub layer2: CdConfig,
    /// `(p_v, p_h1, p_h2)`.
    pub sizes: (usize, usize, usize),
}

impl DbmConfig {
    pub fn new(sizes: (usize, usize, usize)) -> Self {
        DbmConfig {
            layer1: CdConfig::default(),
            layer2: CdConfig {
                seed: 1,
                ..CdConfig::default()
            },
            sizes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (pv, ph1, ph2) = self.sizes;
        if pv == 0 || ph1 == 0 || ph2 == 0 {
            return Err(Error::InvalidConfig("layer sizes must be at least 1".into()));
        }
        self.layer1.validate()?;
        self.layer2.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PretrainLog {
    pub stage1: TrainLog,
    pub stage2: TrainLog,
}

const FIRST_LAYER: Coupling = Coupling {
    up_scale: 2.0,
    down_scale: 1.0,
    freeze_visible_bias: false,
};

const SECOND_LAYER: Coupling = Coupling {
    up_scale: 1.0,
    down_scale: 2.0,
    freeze_visible_bias: true,
};

/// Greedy layer-wise pretraining.
pub fn pretrain_dbm(data: &[Vec<f64>], cfg: &DbmConfig) -> Result<(DbmParams, PretrainLog)> {
    pretrain_dbm_with(data, cfg, |_| {})
}

/// [`pretrain_dbm`] that hands the second stage's training vectors to
/// `inspect` before the second layer is trained.
pub fn pretrain_dbm_with(
    data: &[Vec<f64>],
    cfg: &DbmConfig,
    mut inspect: impl FnMut(&[Vec<f64>]),
) -> Result<(DbmParams, PretrainLog)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    let (pv, ph1, ph2) = cfg.sizes;
    for v in data {
        check_len("training vector", pv, v.len())?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.layer1.seed);
    let init = RbmParams::random(pv, ph1, 0.01, &mut rng);
    let (first, stage1) = rbm::train_from(data, init, &cfg.layer1, FIRST_LAYER, &mut rng)?;

    let inputs = stage_two_inputs(data, &first)?;
    inspect(&inputs);

    // W₁, b and c₁ are frozen; the second machine starts from c₁ as its
    // visible bias and leaves it untouched.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.layer2.seed);
    let mut init = RbmParams::random(ph1, ph2, 0.01, &mut rng);
    init.b = first.c.clone();
    let (second, stage2) = rbm::train_from(&inputs, init, &cfg.layer2, SECOND_LAYER, &mut rng)?;

    let params = DbmParams {
        w1: first.w,
        w2: second.w,
        b: first.b,
        c1: first.c,
        c2: second.c,
    };
    params.validate()?;
    Ok((params, PretrainLog { stage1, stage2 }))
}

/// Data for the second machine: σ(2W₁ᵀv + c₁) for every training vector.
pub fn stage_two_inputs(data: &[Vec<f64>], first: &RbmParams) -> Result<Vec<Vec<f64>>> {
    data.iter()
        .map(|v| first.prop_up_scaled(v, FIRST_LAYER.up_scale))
        .collect()
}

/// Mean per-unit squared reconstruction error over `data`.
pub fn reconstruction_error(data: &[Vec<f64>], params: &DbmParams) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("reconstruction data"));
    }
    let mut total = 0.0;
    for v in data {
        let r = params.reconstruct(v)?;
        total += v.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / v.len() as f64;
    }
    Ok(total / data.len() as f64)
}

/// log Z over all binary `(v, h₁, h₂)` states.
pub fn log_partition(params: &DbmParams) -> Result<f64> {
    let (pv, ph1, ph2) = params.sizes();
    let units = pv + ph1 + ph2;
    if units > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            units,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut terms = Vec::with_capacity(1 << units);
    for vb in 0..1usize << pv {
        let v = binary_state(vb, pv);
        for h1b in 0..1usize << ph1 {
            let h1 = binary_state(h1b, ph1);
            for h2b in 0..1usize << ph2 {
                terms.push(-params.energy(&v, &h1, &binary_state(h2b, ph2))?);
            }
        }
    }
    Ok(log_sum_exp(&terms))
}

/// Partition function of the three-layer joint by enumeration.
pub fn brute_force_partition(params: &DbmParams) -> Result<f64> {
    Ok(libm::exp(log_partition(params)?))
}
