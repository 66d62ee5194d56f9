//! LambdaRank training with Adam and early stopping on validation
//! nDCG@10.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt::Write;

use rand::seq::SliceRandom;

use crate::corpus::Qrels;
use crate::gnn::{sort_by_score, QueryInput, RerankModel};
use crate::graph::QuerySubgraph;
use crate::linalg::Matrix;
use crate::metrics::{dcg, ndcg_from_grades};
use crate::{rng, Error, Result};

/// Cutoff used for validation and early stopping.
pub const VALIDATION_K: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// upper bound on epochs; early stopping usually ends sooner
    pub epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub sigma: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, epochs: 50, patience: 5, seed: 0, sigma: 1.0, beta1: 0.9, beta2: 0.999, adam_eps: 1e-8 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.epochs == 0 || self.patience == 0 {
            return Err(Error::InvalidArgument("learning rate, epochs and patience must be positive".into()));
        }
        if !(self.sigma > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::InvalidArgument("sigma must be positive and Adam betas in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Positions (0-based) of each document in the order induced by
/// `scores`, ties by index.
fn positions(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    let mut pos = vec![0; scores.len()];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    pos
}

fn ideal_dcg(grades: &[u32]) -> f64 {
    let mut ideal = grades.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    dcg(&ideal, ideal.len())
}

/// `|ΔnDCG|` from swapping documents `i` and `j` in the current order.
fn swap_delta(grades: &[u32], pos: &[usize], i: usize, j: usize, idcg: f64) -> f64 {
    let disc = |p: usize| 1.0 / libm::log2((p + 2) as f64);
    let gain_diff = f64::from(grades[i]) - f64::from(grades[j]);
    libm::fabs(gain_diff * (disc(pos[i]) - disc(pos[j]))) / idcg
}

/// `∂C/∂s` for the LambdaRank pairwise cost.
///
/// For each pair with `grade_i > grade_j`,
/// `λ = −σ / (1 + exp(σ(s_i − s_j))) · |ΔnDCG_ij|` is added to `ds_i` and
/// subtracted from `ds_j`. Descending along `−ds` raises better documents.
pub fn lambdarank_gradients(scores: &[f64], grades: &[u32], sigma: f64) -> Vec<f64> {
    assert_eq!(scores.len(), grades.len(), "one grade per score");
    let mut ds = vec![0.0; scores.len()];
    let idcg = ideal_dcg(grades);
    if idcg <= 0.0 {
        return ds;
    }
    let pos = positions(scores);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if grades[i] <= grades[j] {
                continue;
            }
            let delta = swap_delta(grades, &pos, i, j, idcg);
            let lambda = -sigma / (1.0 + libm::exp(sigma * (scores[i] - scores[j]))) * delta;
            ds[i] += lambda;
            ds[j] -= lambda;
        }
    }
    ds
}

/// The cost whose gradient [`lambdarank_gradients`] returns, with the
/// `|ΔnDCG|` weights held fixed: `Σ |Δ_ij| · ln(1 + exp(−σ(s_i − s_j)))`.
pub fn lambdarank_loss(scores: &[f64], grades: &[u32], sigma: f64) -> f64 {
    let idcg = ideal_dcg(grades);
    if idcg <= 0.0 {
        return 0.0;
    }
    let pos = positions(scores);
    let mut loss = 0.0;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if grades[i] > grades[j] {
                let z = -sigma * (scores[i] - scores[j]);
                // stable softplus
                let softplus = if z > 0.0 { z + libm::log1p(libm::exp(-z)) } else { libm::log1p(libm::exp(z)) };
                loss += swap_delta(grades, &pos, i, j, idcg) * softplus;
            }
        }
    }
    loss
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], config: &TrainConfig) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let (b1, b2) = (config.beta1, config.beta2);
        let c1 = 1.0 - libm::pow(b1, self.t as f64);
        let c2 = 1.0 - libm::pow(b2, self.t as f64);
        for k in 0..params.len() {
            let g = grads[k];
            self.m[k] = b1 * self.m[k] + (1.0 - b1) * g;
            self.v[k] = b2 * self.v[k] + (1.0 - b2) * g * g;
            let m_hat = self.m[k] / c1;
            let v_hat = self.v[k] / c2;
            params[k] -= config.learning_rate * m_hat / (libm::sqrt(v_hat) + config.adam_eps);
        }
    }
}

/// A query ready for training or evaluation.
#[derive(Debug, Clone)]
pub struct PreparedQuery {
    pub sub: QuerySubgraph,
    pub input: QueryInput,
    /// grade per candidate, unjudged as 0
    pub grades: Vec<u32>,
    /// every judged grade for the query, for the ideal ordering
    pub judged: Vec<u32>,
}

impl PreparedQuery {
    pub fn new(model: &RerankModel, sub: QuerySubgraph, x: Matrix, x_aug: Matrix, qrels: &Qrels) -> Result<Self> {
        let input = model.prepare(&sub, x, x_aug)?;
        let grades = sub.nodes.iter().map(|d| qrels.grade_or_zero(&sub.query_id, d)).collect();
        let judged = qrels.for_query(&sub.query_id).map(|m| m.values().copied().collect()).unwrap_or_default();
        Ok(Self { sub, input, grades, judged })
    }

    /// nDCG@k of the model's ordering; `None` if nothing is relevant.
    pub fn ndcg(&self, model: &RerankModel, k: usize) -> Result<Option<f64>> {
        let scores = model.scores(&self.input)?;
        let order = sort_by_score(&self.sub.nodes, &scores);
        let ranked: Vec<u32> = order.iter().map(|&i| self.grades[i]).collect();
        Ok(ndcg_from_grades(&ranked, &self.judged, k))
    }
}

/// Mean nDCG@k over queries with at least one positive judgment.
pub fn mean_ndcg(model: &RerankModel, queries: &[PreparedQuery], k: usize) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for q in queries {
        if let Some(v) = q.ndcg(model, k)? {
            sum += v;
            n += 1;
        }
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    EarlyStopped,
    MaxEpochs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Progress {
    Improved,
    Stalled,
    Stop,
}

/// Tracks the best validation value; asks to stop after `patience`
/// epochs without a strict improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
    stalled: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self { patience, best: None, stalled: 0 }
    }

    pub fn observe(&mut self, epoch: usize, value: f64) -> Progress {
        match self.best {
            Some((_, best)) if value <= best => {
                self.stalled += 1;
                if self.stalled >= self.patience {
                    Progress::Stop
                } else {
                    Progress::Stalled
                }
            }
            _ => {
                self.best = Some((epoch, value));
                self.stalled = 0;
                Progress::Improved
            }
        }
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub val_ndcg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stop: StopReason,
}

impl TrainReport {
    pub fn best_val_ndcg(&self) -> f64 {
        self.epochs.iter().find(|e| e.epoch == self.best_epoch).map_or(0.0, |e| e.val_ndcg)
    }

    /// `epoch,loss,val_ndcg10` lines after a header; a trailing comment
    /// records the selected epoch.
    pub fn to_text(&self) -> String {
        let mut out = String::from("epoch,loss,val_ndcg10\n");
        for e in &self.epochs {
            let _ = writeln!(out, "{},{:.6},{:.6}", e.epoch, e.loss, e.val_ndcg);
        }
        let stop = match self.stop {
            StopReason::EarlyStopped => "early_stopping",
            StopReason::MaxEpochs => "max_epochs",
        };
        let _ = writeln!(out, "# best_epoch={} stop={stop}", self.best_epoch);
        out
    }
}

/// Per-query LambdaRank updates; returns the parameters of the best
/// validation epoch.
pub fn train(
    mut model: RerankModel,
    train_set: &[PreparedQuery],
    val_set: &[PreparedQuery],
    config: &TrainConfig,
) -> Result<(RerankModel, TrainReport)> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::InvalidArgument("training and validation sets must be non-empty".into()));
    }
    let mut params = model.flat_params();
    let mut adam = AdamState::new(params.len());
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut shuffle = rng::stream(config.seed, rng::fnv1a(b"shuffle"));
    let mut stopping = EarlyStopping::new(config.patience);
    let mut best_model = model.clone();
    let mut epochs = Vec::new();
    let mut stop = StopReason::MaxEpochs;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle);
        let mut loss = 0.0;
        for &qi in &order {
            let q = &train_set[qi];
            let pass = model.forward(&q.input)?;
            loss += lambdarank_loss(&pass.scores, &q.grades, config.sigma);
            let ds = lambdarank_gradients(&pass.scores, &q.grades, config.sigma);
            let grads = model.backward(&q.input, &pass, &ds)?.flat_params();
            adam.step(&mut params, &grads, config);
            model.set_flat_params(&params)?;
        }
        let val_ndcg = mean_ndcg(&model, val_set, VALIDATION_K)?;
        epochs.push(EpochRecord { epoch, loss: loss / train_set.len() as f64, val_ndcg });
        match stopping.observe(epoch, val_ndcg) {
            Progress::Improved => best_model = model.clone(),
            Progress::Stalled => {}
            Progress::Stop => {
                stop = StopReason::EarlyStopped;
                break;
            }
        }
    }
    let (best_epoch, _) = stopping.best().expect("at least one epoch ran");
    Ok((best_model, TrainReport { epochs, best_epoch, stop }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_grades_give_zero() {
        assert_eq!(lambdarank_gradients(&[0.3, -1.0, 2.0], &[1, 1, 1], 1.0), vec![0.0; 3]);
        assert_eq!(lambdarank_gradients(&[0.3, -1.0], &[0, 0], 1.0), vec![0.0; 2]);
    }

    #[test]
    fn two_doc_hand_value() {
        let ds = lambdarank_gradients(&[0.5, 0.5], &[1, 0], 1.0);
        // tie keeps index order: doc 0 at position 0, doc 1 at position 1
        let delta = (1.0 - 1.0 / libm::log2(3.0)) / 1.0;
        assert!((ds[0] + 0.5 * delta).abs() < 1e-12);
        assert!((ds[1] - 0.5 * delta).abs() < 1e-12);
    }

    #[test]
    fn adam_zero_gradient_and_first_step() {
        let cfg = TrainConfig::default();
        let mut p = vec![1.0, -2.0];
        let mut st = AdamState::new(2);
        st.step(&mut p, &[0.0, 0.0], &cfg);
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(st.step_count(), 1);

        let cfg = TrainConfig { adam_eps: 0.0, learning_rate: 0.01, ..TrainConfig::default() };
        let mut p = vec![1.0, 1.0];
        let mut st = AdamState::new(2);
        st.step(&mut p, &[3.7, -0.002], &cfg);
        assert!((p[0] - 0.99).abs() < 1e-12, "{}", p[0]);
        assert!((p[1] - 1.01).abs() < 1e-12, "{}", p[1]);
    }

    #[test]
    fn early_stopping_keeps_first_of_worsening_run() {
        let mut es = EarlyStopping::new(1);
        assert_eq!(es.observe(1, 0.5), Progress::Improved);
        assert_eq!(es.observe(2, 0.4), Progress::Stop);
        assert_eq!(es.best(), Some((1, 0.5)));

        let mut es = EarlyStopping::new(2);
        es.observe(1, 0.1);
        es.observe(2, 0.3);
        assert_eq!(es.observe(3, 0.3), Progress::Stalled);
        assert_eq!(es.observe(4, 0.2), Progress::Stop);
        assert_eq!(es.best(), Some((2, 0.3)));
    }
}
