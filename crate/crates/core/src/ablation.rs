//! Inference-time corruption of the GNN branch output, to measure how
//! much the ranking depends on it.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use rand::seq::SliceRandom;

use crate::corpus::{Qrels, RunFile, RunRow};
use crate::gnn::{QueryInput, RerankModel};
use crate::graph::QuerySubgraph;
use crate::linalg::Matrix;
use crate::metrics::evaluate_run;
use crate::training::PreparedQuery;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Corruption {
    /// `H_loc` replaced by zeros.
    Zero,
    /// Rows of `H_loc` permuted across nodes.
    ShuffleRows { seed: u64 },
    /// `H_loc + σ·N(0, 1)` elementwise.
    Gaussian { sigma: f64, seed: u64 },
}

impl Corruption {
    pub fn parse(name: &str, seed: u64, sigma: f64) -> Result<Self> {
        match name {
            "zero" => Ok(Corruption::Zero),
            "shuffle" | "shuffle_rows" => Ok(Corruption::ShuffleRows { seed }),
            "gaussian" => {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidArgument(alloc::format!("noise sigma {sigma}")));
                }
                Ok(Corruption::Gaussian { sigma, seed })
            }
            _ => Err(Error::InvalidArgument(alloc::format!("unknown corruption mode `{name}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Corruption::Zero => "zero",
            Corruption::ShuffleRows { .. } => "shuffle_rows",
            Corruption::Gaussian { .. } => "gaussian",
        }
    }

    /// Row permutation used by `ShuffleRows` for a query of `n` nodes.
    pub fn permutation(seed: u64, query_id: &str, n: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng::stream(seed, rng::fnv1a(query_id.as_bytes())));
        perm
    }

    pub fn apply(&self, h_loc: &Matrix, query_id: &str) -> Matrix {
        match *self {
            Corruption::Zero => Matrix::zeros(h_loc.rows(), h_loc.cols()),
            Corruption::ShuffleRows { seed } => h_loc.permute_rows(&Self::permutation(seed, query_id, h_loc.rows())),
            Corruption::Gaussian { sigma, seed } => {
                let mut stream = rng::stream(seed, rng::fnv1a(query_id.as_bytes()));
                let mut out = h_loc.clone();
                for v in out.as_mut_slice() {
                    *v += sigma * rng::standard_normal(&mut stream);
                }
                out
            }
        }
    }
}

/// Same as [`RerankModel::rerank`] with `H_loc` corrupted before the
/// concatenation; the individual branch is untouched.
pub fn rerank_corrupted(
    model: &RerankModel,
    sub: &QuerySubgraph,
    input: &QueryInput,
    mode: &Corruption,
    tag: &str,
) -> Result<Vec<RunRow>> {
    let h_loc = model.forward_local(&input.x_aug, &input.graph)?;
    let h_ind = model.forward_individual(&input.x)?;
    let scores = model.score(&h_ind, &mode.apply(&h_loc, &sub.query_id))?;
    crate::gnn::model_rows(sub, &scores, tag)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub mode: String,
    pub metric: String,
    pub with_gnn: f64,
    pub without_gnn: f64,
    pub drop: f64,
}

/// One row per (mode, metric): the metric with the intact branch, with
/// the corrupted branch, and their difference.
pub fn ablation_report(
    model: &RerankModel,
    queries: &[PreparedQuery],
    qrels: &Qrels,
    modes: &[Corruption],
    ks: &[usize],
) -> Result<Vec<AblationRow>> {
    let mut clean = Vec::new();
    for q in queries {
        clean.extend(model.rerank(&q.sub, &q.input, "gnrr")?);
    }
    let base = evaluate_run(&RunFile::new(clean), qrels, ks)?;
    let mut rows = Vec::new();
    for mode in modes {
        let mut run = Vec::new();
        for q in queries {
            run.extend(rerank_corrupted(model, &q.sub, &q.input, mode, "ablate")?);
        }
        let corrupted = evaluate_run(&RunFile::new(run), qrels, ks)?;
        for metric in base.metric_names() {
            let (with_gnn, without_gnn) = (base.mean(metric), corrupted.mean(metric));
            rows.push(AblationRow {
                mode: mode.name().to_string(),
                metric: metric.clone(),
                with_gnn,
                without_gnn,
                drop: with_gnn - without_gnn,
            });
        }
    }
    Ok(rows)
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("mode,metric,with_gnn,without_gnn,drop\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:.6},{:.6},{:.6}", r.mode, r.metric, r.with_gnn, r.without_gnn, r.drop);
    }
    out
}
