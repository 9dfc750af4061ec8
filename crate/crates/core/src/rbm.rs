//! Restricted Boltzmann machine with binary units: energy, exact enumeration
//! for small models, Gibbs sampling and contrastive-divergence training.
//!
//! Conditionals follow the sign convention that makes them consistent with
//! the Boltzmann distribution p(v, h) ∝ exp(−E(v, h)):
//!
//! ```text
//! E(v, h)      = −vᵀW h − bᵀv − cᵀh
//! p(hⱼ = 1 | v) = σ(Σᵢ Wᵢⱼ vᵢ + cⱼ)
//! p(vᵢ = 1 | h) = σ(Σⱼ Wᵢⱼ hⱼ + bᵢ)
//! ```

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::math::{all_finite, log_sum_exp, sigmoid};
use crate::matrix::{dot, Matrix};

/// Largest `p_v + p_h` accepted by the enumeration routines.
pub const ENUMERATION_LIMIT: usize = 20;

/// Weights `w` (p_v × p_h), visible bias `b`, hidden bias `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams {
    pub w: Matrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl RbmParams {
    pub fn new(w: Matrix, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let params = RbmParams { w, b, c };
        params.validate()?;
        Ok(params)
    }

    pub fn zeros(visible: usize, hidden: usize) -> Self {
        RbmParams {
            w: Matrix::zeros(visible, hidden),
            b: vec![0.0; visible],
            c: vec![0.0; hidden],
        }
    }

    /// Weights uniform in `[-scale, scale]`, zero biases.
    pub fn random(visible: usize, hidden: usize, scale: f64, rng: &mut impl Rng) -> Self {
        let w = Matrix::from_fn(visible, hidden, |_, _| {
            if scale > 0.0 {
                rng.gen_range(-scale..=scale)
            } else {
                0.0
            }
        });
        RbmParams {
            w,
            b: vec![0.0; visible],
            c: vec![0.0; hidden],
        }
    }

    pub fn visible(&self) -> usize {
        self.w.rows()
    }

    pub fn hidden(&self) -> usize {
        self.w.cols()
    }

    pub fn validate(&self) -> Result<()> {
        check_len("visible bias", self.w.rows(), self.b.len())?;
        check_len("hidden bias", self.w.cols(), self.c.len())?;
        if !(self.w.is_finite() && all_finite(&self.b) && all_finite(&self.c)) {
            return Err(Error::NonFinite("rbm parameters"));
        }
        Ok(())
    }

    pub fn energy(&self, v: &[f64], h: &[f64]) -> Result<f64> {
        check_len("visible state", self.visible(), v.len())?;
        check_len("hidden state", self.hidden(), h.len())?;
        let wh = self.w.mul_vec(h)?;
        Ok(-dot(v, &wh) - dot(&self.b, v) - dot(&self.c, h))
    }

    /// p(hⱼ = 1 | v) for every hidden unit.
    pub fn prop_up(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.prop_up_scaled(v, 1.0)
    }

    /// p(vᵢ = 1 | h) for every visible unit.
    pub fn prop_down(&self, h: &[f64]) -> Result<Vec<f64>> {
        self.prop_down_scaled(h, 1.0)
    }

    /// σ(scale · Wᵀv + c).
    pub fn prop_up_scaled(&self, v: &[f64], scale: f64) -> Result<Vec<f64>> {
        check_len("visible vector", self.visible(), v.len())?;
        let mut a = self.w.tr_mul_vec(v)?;
        for (x, c) in a.iter_mut().zip(&self.c) {
            *x = sigmoid(scale * *x + c);
        }
        Ok(a)
    }

    /// σ(scale · W h + b).
    pub fn prop_down_scaled(&self, h: &[f64], scale: f64) -> Result<Vec<f64>> {
        check_len("hidden vector", self.hidden(), h.len())?;
        let mut a = self.w.mul_vec(h)?;
        for (x, b) in a.iter_mut().zip(&self.b) {
            *x = sigmoid(scale * *x + b);
        }
        Ok(a)
    }
}

/// How a layer couples to its neighbours while it is trained on its own.
///
/// A plain RBM uses unit scales. Greedy pretraining of a deep machine doubles
/// the bottom-up input of the first layer and the top-down input of the top
/// layer, and keeps the lower layer's bias fixed while the upper layer trains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub up_scale: f64,
    pub down_scale: f64,
    pub freeze_visible_bias: bool,
}

impl Coupling {
    pub const PLAIN: Coupling = Coupling {
        up_scale: 1.0,
        down_scale: 1.0,
        freeze_visible_bias: false,
    };
}

impl Default for Coupling {
    fn default() -> Self {
        Coupling::PLAIN
    }
}

/// Contrastive-divergence settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CdConfig {
    /// Gibbs steps per update (CD-n).
    pub n: usize,
    pub eta_w: f64,
    pub eta_b: f64,
    pub eta_c: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Optional L2 decay on the weights; zero leaves the plain CD rule.
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for CdConfig {
    fn default() -> Self {
        CdConfig {
            n: 1,
            eta_w: 0.1,
            eta_b: 0.1,
            eta_c: 0.1,
            batch_size: 10,
            epochs: 100,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

impl CdConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if self.n == 0 {
            return Err(Error::InvalidConfig("CD steps n must be at least 1".into()));
        }
        if !(positive(self.eta_w) && positive(self.eta_b) && positive(self.eta_c)) {
            return Err(Error::InvalidConfig("learning rates must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "weight decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

/// Chain position after `step` Gibbs rounds; `v` and `h` are activation
/// probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    pub v: Vec<f64>,
    pub h: Vec<f64>,
    pub step: usize,
}

/// Independent Bernoulli draws, one per probability.
pub fn sample_bernoulli(probs: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    probs
        .iter()
        .map(|&p| if rng.gen::<f64>() < p { 1.0 } else { 0.0 })
        .collect()
}

/// Runs `n` rounds of alternating Gibbs sampling from `v0`.
pub fn gibbs_chain(v0: &[f64], params: &RbmParams, n: usize, rng: &mut impl Rng) -> Result<GibbsState> {
    gibbs_chain_coupled(v0, params, Coupling::PLAIN, n, rng)
}

/// Gibbs chain with scaled couplings. Intermediate states are sampled; the
/// final `vⁿ` is the activation probability given the last hidden sample and
/// `hⁿ = p(h | vⁿ)`.
pub fn gibbs_chain_coupled(
    v0: &[f64],
    params: &RbmParams,
    coupling: Coupling,
    n: usize,
    rng: &mut impl Rng,
) -> Result<GibbsState> {
    if n == 0 {
        return Err(Error::InvalidConfig("Gibbs chain needs at least one step".into()));
    }
    let mut h_sample = sample_bernoulli(&params.prop_up_scaled(v0, coupling.up_scale)?, rng);
    let mut v_prob = Vec::new();
    for step in 1..=n {
        v_prob = params.prop_down_scaled(&h_sample, coupling.down_scale)?;
        if step < n {
            let v_sample = sample_bernoulli(&v_prob, rng);
            h_sample = sample_bernoulli(&params.prop_up_scaled(&v_sample, coupling.up_scale)?, rng);
        }
    }
    let h = params.prop_up_scaled(&v_prob, coupling.up_scale)?;
    Ok(GibbsState { v: v_prob, h, step: n })
}

/// Accumulated positive-minus-negative statistics of a CD batch.
#[derive(Debug, Clone, PartialEq)]
pub struct CdStatistics {
    dw: Matrix,
    db: Vec<f64>,
    dc: Vec<f64>,
    count: usize,
}

impl CdStatistics {
    pub fn new(visible: usize, hidden: usize) -> Self {
        CdStatistics {
            dw: Matrix::zeros(visible, hidden),
            db: vec![0.0; visible],
            dc: vec![0.0; hidden],
            count: 0,
        }
    }

    /// Adds `v⁰h⁰ᵀ − vⁿhⁿᵀ`, `v⁰ − vⁿ` and `h⁰ − hⁿ` for one example.
    pub fn accumulate(&mut self, v0: &[f64], h0: &[f64], vn: &[f64], hn: &[f64]) {
        self.dw.add_outer(1.0, v0, h0);
        self.dw.add_outer(-1.0, vn, hn);
        for ((d, a), b) in self.db.iter_mut().zip(v0).zip(vn) {
            *d += a - b;
        }
        for ((d, a), b) in self.dc.iter_mut().zip(h0).zip(hn) {
            *d += a - b;
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Applies the batch-mean update to `params`.
    pub fn apply(&self, params: &mut RbmParams, cfg: &CdConfig, coupling: Coupling) {
        if self.count == 0 {
            return;
        }
        let inv = 1.0 / self.count as f64;
        let decay = cfg.weight_decay;
        for (w, d) in params.w.as_mut_slice().iter_mut().zip(self.dw.as_slice()) {
            *w += cfg.eta_w * (d * inv - decay * *w);
        }
        if !coupling.freeze_visible_bias {
            for (b, d) in params.b.iter_mut().zip(&self.db) {
                *b += cfg.eta_b * d * inv;
            }
        }
        for (c, d) in params.c.iter_mut().zip(&self.dc) {
            *c += cfg.eta_c * d * inv;
        }
    }
}

fn check_data(data: &[Vec<f64>], visible: usize) -> Result<()> {
    for v in data {
        check_len("training vector", visible, v.len())?;
        if !v.iter().all(|x| (0.0..=1.0).contains(x)) {
            return Err(Error::InvalidConfig("visible data must lie in [0, 1]".into()));
        }
    }
    Ok(())
}

/// One CD-n update on `batch`, in place.
pub fn cd_step(
    params: &mut RbmParams,
    batch: &[&[f64]],
    cfg: &CdConfig,
    coupling: Coupling,
    rng: &mut impl Rng,
) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Empty("CD batch"));
    }
    let mut stats = CdStatistics::new(params.visible(), params.hidden());
    for v0 in batch {
        check_len("training vector", params.visible(), v0.len())?;
        let h0 = params.prop_up_scaled(v0, coupling.up_scale)?;
        let chain = gibbs_chain_coupled(v0, params, coupling, cfg.n, rng)?;
        stats.accumulate(v0, &h0, &chain.v, &chain.h);
    }
    stats.apply(params, cfg, coupling);
    Ok(())
}

/// Returns `params` after one CD-n update on `batch`.
pub fn cd_update(batch: &[Vec<f64>], params: &RbmParams, cfg: &CdConfig, rng: &mut impl Rng) -> Result<RbmParams> {
    check_data(batch, params.visible())?;
    let refs: Vec<&[f64]> = batch.iter().map(Vec::as_slice).collect();
    let mut next = params.clone();
    cd_step(&mut next, &refs, cfg, Coupling::PLAIN, rng)?;
    Ok(next)
}

/// Per-epoch training diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    /// Mean squared per-unit error between each example and its mean-field
    /// reconstruction p(v | p(h | v)), measured after every epoch.
    pub reconstruction_error: Vec<f64>,
}

/// Mean over examples and units of (v − p(v | p(h | v)))².
pub fn reconstruction_error(data: &[Vec<f64>], params: &RbmParams, coupling: Coupling) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("reconstruction data"));
    }
    let mut total = 0.0;
    for v in data {
        let h = params.prop_up_scaled(v, coupling.up_scale)?;
        let r = params.prop_down_scaled(&h, coupling.down_scale)?;
        total += v.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / v.len() as f64;
    }
    Ok(total / data.len() as f64)
}

/// Trains a fresh RBM with `hidden` units on `data`.
///
/// Weights start uniform in `[-0.01, 0.01]`, biases at zero. Every epoch
/// visits the data in a seeded random order.
pub fn train_rbm(data: &[Vec<f64>], hidden: usize, cfg: &CdConfig) -> Result<(RbmParams, TrainLog)> {
    cfg.validate()?;
    let visible = data.first().ok_or(Error::Empty("training data"))?.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = RbmParams::random(visible, hidden, 0.01, &mut rng);
    train_from(data, init, cfg, Coupling::PLAIN, &mut rng)
}

/// Continues CD training from `params` with the given coupling.
pub fn train_from(
    data: &[Vec<f64>],
    mut params: RbmParams,
    cfg: &CdConfig,
    coupling: Coupling,
    rng: &mut impl Rng,
) -> Result<(RbmParams, TrainLog)> {
    cfg.validate()?;
    params.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    check_data(data, params.visible())?;

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = TrainLog::default();
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&[f64]> = chunk.iter().map(|&i| data[i].as_slice()).collect();
            cd_step(&mut params, &batch, cfg, coupling, rng)?;
        }
        log.reconstruction_error
            .push(reconstruction_error(data, &params, coupling)?);
    }
    Ok((params, log))
}

fn check_enumerable(units: usize) -> Result<()> {
    if units > ENUMERATION_LIMIT {
        Err(Error::EnumerationLimit {
            units,
            limit: ENUMERATION_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// Binary state with bit `i` of `bits` in component `i`.
pub fn binary_state(bits: usize, len: usize) -> Vec<f64> {
    (0..len).map(|i| ((bits >> i) & 1) as f64).collect()
}

/// Partition function Z by summing exp(−E) over all 2^(p_v + p_h) states.
pub fn brute_force_partition(params: &RbmParams) -> Result<f64> {
    Ok(libm::exp(log_partition(params)?))
}

/// log Z by enumeration, accumulated with log-sum-exp.
pub fn log_partition(params: &RbmParams) -> Result<f64> {
    let (pv, ph) = (params.visible(), params.hidden());
    check_enumerable(pv + ph)?;
    let mut terms = Vec::with_capacity(1 << (pv + ph));
    for vb in 0..1usize << pv {
        let v = binary_state(vb, pv);
        for hb in 0..1usize << ph {
            terms.push(-params.energy(&v, &binary_state(hb, ph))?);
        }
    }
    Ok(log_sum_exp(&terms))
}

/// Mean exact log-likelihood log p(v) = log Σ_h exp(−E(v, h)) − log Z over
/// binary data vectors.
pub fn log_likelihood(data: &[Vec<f64>], params: &RbmParams) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("log-likelihood data"));
    }
    let log_z = log_partition(params)?;
    let ph = params.hidden();
    let mut total = 0.0;
    for v in data {
        check_len("visible state", params.visible(), v.len())?;
        let terms: Vec<f64> = (0..1usize << ph)
            .map(|hb| params.energy(v, &binary_state(hb, ph)).map(|e| -e))
            .collect::<Result<_>>()?;
        total += log_sum_exp(&terms) - log_z;
    }
    Ok(total / data.len() as f64)
}
