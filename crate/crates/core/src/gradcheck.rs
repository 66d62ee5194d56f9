//! Central finite-difference verification of the backward passes.
//!
//! The check only calls forward code: for a random linear functional of
//! the scores `L = Σ c_i s_i`, every parameter is nudged by `±h` and the
//! difference quotient compared with `backward(ds = c)`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::features::augment_with_rank;
use crate::gnn::{IndividualMode, LayerKind, ModelConfig, QueryInput, RerankModel};
use crate::graph::QuerySubgraph;
use crate::linalg::Matrix;
use crate::{rng, Result};

pub const DEFAULT_STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

/// A random subgraph of `n` nodes (each node with 1–3 random arcs) and
/// Gaussian features of width `dim`.
pub fn random_instance(model: &RerankModel, n: usize, rng: &mut ChaCha8Rng) -> Result<(QuerySubgraph, QueryInput)> {
    let dim = model.config.input_dim;
    let mut arcs = Vec::new();
    for i in 0..n as u32 {
        for _ in 0..rng.random_range(1..=3usize) {
            let j = rng.random_range(0..n as u32);
            if j != i && !arcs.contains(&(i, j)) {
                arcs.push((i, j));
            }
        }
    }
    let nodes = (0..n).map(|i| alloc::format!("n{i:02}")).collect();
    let sub = QuerySubgraph::new(alloc::format!("trial{}", rng.random::<u32>()), nodes, arcs);
    let x = Matrix::from_fn(n, dim, |_, _| rng::standard_normal(rng) * 0.7);
    let x_aug = augment_with_rank(&x, &sub)?;
    let input = model.prepare(&sub, x, x_aug)?;
    Ok((sub, input))
}

/// Perturbs every parameter (biases and GIN ε included) so no block sits
/// at its zero initialization.
pub fn jitter_params(model: &mut RerankModel, rng: &mut ChaCha8Rng, scale: f64) -> Result<()> {
    let mut p = model.flat_params();
    p.iter_mut().for_each(|v| *v += rng.random_range(-scale..scale));
    model.set_flat_params(&p)
}

fn weighted_sum(model: &RerankModel, input: &QueryInput, coeffs: &[f64]) -> Result<f64> {
    Ok(model.scores(input)?.iter().zip(coeffs).map(|(s, c)| s * c).sum())
}

fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, b)| (a - b) * (a - b)).sum();
    let na: f64 = analytic.iter().map(|a| a * a).sum();
    let nn: f64 = numeric.iter().map(|a| a * a).sum();
    let scale = libm::sqrt(na.max(nn));
    if scale < 1e-7 {
        libm::sqrt(diff)
    } else {
        libm::sqrt(diff) / scale
    }
}

/// Relative error per named parameter block for one instance.
pub fn check_instance(model: &RerankModel, input: &QueryInput, coeffs: &[f64], step: f64) -> Result<Vec<(String, f64)>> {
    let pass = model.forward(input)?;
    let analytic = model.backward(input, &pass, coeffs)?.flat_params();
    let base = model.flat_params();
    let mut probe = model.clone();
    let mut numeric = Vec::with_capacity(base.len());
    let mut theta = base.clone();
    for k in 0..base.len() {
        theta[k] = base[k] + step;
        probe.set_flat_params(&theta)?;
        let plus = weighted_sum(&probe, input, coeffs)?;
        theta[k] = base[k] - step;
        probe.set_flat_params(&theta)?;
        let minus = weighted_sum(&probe, input, coeffs)?;
        theta[k] = base[k];
        numeric.push((plus - minus) / (2.0 * step));
    }
    let mut out = Vec::new();
    let mut at = 0;
    for (name, len) in model.param_blocks() {
        out.push((name, relative_error(&analytic[at..at + len], &numeric[at..at + len])));
        at += len;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub kind: LayerKind,
    pub trials: usize,
    /// worst relative error seen per parameter block
    pub max_rel_err: BTreeMap<String, f64>,
}

impl GradcheckReport {
    pub fn worst(&self) -> f64 {
        self.max_rel_err.values().copied().fold(0.0, f64::max)
    }

    pub fn passed(&self, tolerance: f64) -> bool {
        self.worst() < tolerance
    }
}

/// Runs `trials` random instances (6–12 nodes) for one layer kind,
/// alternating identity and MLP individual branches.
pub fn gradcheck(kind: LayerKind, trials: usize, seed: u64) -> Result<GradcheckReport> {
    let mut stream = rng::stream(seed, rng::fnv1a(kind.name().as_bytes()));
    let mut max_rel_err: BTreeMap<String, f64> = BTreeMap::new();
    for t in 0..trials {
        let config = ModelConfig {
            kind,
            layers: 2,
            input_dim: 5,
            hidden: 4,
            individual: if t % 2 == 0 { IndividualMode::Mlp } else { IndividualMode::Identity },
            individual_width: 3,
            scorer_hidden: 4,
            negatives: 2,
            seed: stream.random(),
        };
        let mut model = RerankModel::new(config)?;
        jitter_params(&mut model, &mut stream, 0.3)?;
        let n = stream.random_range(6..=12usize);
        let (_, input) = random_instance(&model, n, &mut stream)?;
        let coeffs: Vec<f64> = (0..n).map(|_| rng::standard_normal(&mut stream)).collect();
        for (name, err) in check_instance(&model, &input, &coeffs, DEFAULT_STEP)? {
            let slot = max_rel_err.entry(name.to_string()).or_insert(0.0);
            *slot = slot.max(err);
        }
    }
    Ok(GradcheckReport { kind, trials, max_rel_err })
}
