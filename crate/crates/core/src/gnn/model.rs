use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use super::dense::{backward_stack, forward_stack, Activation, DenseCache, DenseLayer};
use super::layers::{sample_negatives, GnnLayer, LayerCache, LayerGraph, LayerKind};
use super::Parameters;
use crate::corpus::{RunFile, RunRow};
use crate::graph::QuerySubgraph;
use crate::linalg::Matrix;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndividualMode {
    /// `H_ind = X`: the encoder is trusted as-is.
    Identity,
    /// One dense relu layer over `X`.
    Mlp,
}

impl IndividualMode {
    pub fn name(self) -> &'static str {
        match self {
            IndividualMode::Identity => "identity",
            IndividualMode::Mlp => "mlp",
        }
    }
}

impl fmt::Display for IndividualMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IndividualMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(IndividualMode::Identity),
            "mlp" => Ok(IndividualMode::Mlp),
            _ => Err(Error::InvalidArgument(alloc::format!("unknown individual branch `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub kind: LayerKind,
    /// number of message-passing layers, L
    pub layers: usize,
    /// embedding width m
    pub input_dim: usize,
    /// GNN hidden and output width m′
    pub hidden: usize,
    pub individual: IndividualMode,
    /// output width of the MLP individual branch
    pub individual_width: usize,
    pub scorer_hidden: usize,
    /// negatives sampled per node for signed layers
    pub negatives: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(kind: LayerKind, input_dim: usize) -> Self {
        Self {
            kind,
            layers: 2,
            input_dim,
            hidden: 32,
            individual: IndividualMode::Identity,
            individual_width: 32,
            scorer_hidden: 32,
            negatives: crate::graph::DEFAULT_C,
            seed: 0,
        }
    }

    /// Width of `H_ind`.
    pub fn individual_dim(&self) -> usize {
        match self.individual {
            IndividualMode::Identity => self.input_dim,
            IndividualMode::Mlp => self.individual_width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.layers == 0 {
            return bad("the GNN branch needs at least one layer");
        }
        if self.input_dim == 0 || self.hidden == 0 || self.scorer_hidden == 0 {
            return bad("widths must be positive");
        }
        if self.individual == IndividualMode::Mlp && self.individual_width == 0 {
            return bad("individual width must be positive");
        }
        if self.kind == LayerKind::Signed && self.hidden % 2 != 0 {
            return bad("signed layers need an even hidden width");
        }
        Ok(())
    }
}

/// Per-query model inputs: `X`, `X'` and the layer graph.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryInput {
    pub x: Matrix,
    pub x_aug: Matrix,
    pub graph: LayerGraph,
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub h_ind: Matrix,
    pub h_loc: Matrix,
    pub scores: Vec<f64>,
    gnn_caches: Vec<LayerCache>,
    ind_caches: Vec<DenseCache>,
    scorer_caches: Vec<DenseCache>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RerankModel {
    pub config: ModelConfig,
    pub gnn: Vec<GnnLayer>,
    /// empty in identity mode
    pub individual: Vec<DenseLayer>,
    pub scorer: Vec<DenseLayer>,
}

impl RerankModel {
    /// Glorot-uniform weights and zero biases from `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut stream = rng::stream(config.seed, rng::fnv1a(b"init"));
        let mut gnn = Vec::with_capacity(config.layers);
        let mut width = config.input_dim + 1;
        for _ in 0..config.layers {
            gnn.push(GnnLayer::init(config.kind, width, config.hidden, &mut stream)?);
            width = config.hidden;
        }
        let individual = match config.individual {
            IndividualMode::Identity => Vec::new(),
            IndividualMode::Mlp => {
                alloc::vec![DenseLayer::init(config.input_dim, config.individual_width, Activation::Relu, &mut stream)]
            }
        };
        let scorer = alloc::vec![
            DenseLayer::init(config.individual_dim() + config.hidden, config.scorer_hidden, Activation::Relu, &mut stream),
            DenseLayer::init(config.scorer_hidden, 1, Activation::Identity, &mut stream),
        ];
        Ok(Self { config, gnn, individual, scorer })
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.for_each_mut("", &mut |_, p| p.iter_mut().for_each(|v| *v = 0.0));
        z
    }

    /// Builds the layer graph for a subgraph. Signed models draw their
    /// negatives from a stream keyed by the model seed and query id, so
    /// the same query always sees the same negatives.
    pub fn prepare(&self, sub: &QuerySubgraph, x: Matrix, x_aug: Matrix) -> Result<QueryInput> {
        if x.rows() != sub.len() || x_aug.rows() != sub.len() {
            return Err(Error::Shape(alloc::format!("feature rows do not match {} nodes", sub.len())));
        }
        let positive = sub.adjacency();
        let graph = if self.config.kind == LayerKind::Signed {
            let seed = rng::derive_seed(self.config.seed, rng::fnv1a(sub.query_id.as_bytes()));
            let negative = sample_negatives(&positive, self.config.negatives, seed);
            LayerGraph::with_negatives(positive, negative)
        } else {
            LayerGraph::new(positive)
        };
        Ok(QueryInput { x, x_aug, graph })
    }

    /// `H_loc`: the message-passing branch over `X'`.
    pub fn forward_local(&self, x_aug: &Matrix, graph: &LayerGraph) -> Result<Matrix> {
        if self.gnn.is_empty() {
            return Err(Error::InvalidArgument("model has no GNN layers".into()));
        }
        let mut h = x_aug.clone();
        for layer in &self.gnn {
            h = layer.apply(&h, graph)?;
        }
        Ok(h)
    }

    /// `H_ind`: `X` itself in identity mode, else the MLP over `X`.
    pub fn forward_individual(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.config.input_dim {
            return Err(Error::Shape(alloc::format!("expected {} feature columns, got {}", self.config.input_dim, x.cols())));
        }
        let mut h = x.clone();
        for layer in &self.individual {
            h = layer.apply(&h)?;
        }
        Ok(h)
    }

    /// Row-wise scorer over `[H_ind ‖ H_loc]`.
    pub fn score(&self, h_ind: &Matrix, h_loc: &Matrix) -> Result<Vec<f64>> {
        if h_ind.rows() != h_loc.rows() {
            return Err(Error::Shape("branch outputs differ in row count".into()));
        }
        let mut h = h_ind.hconcat(h_loc);
        for layer in &self.scorer {
            h = layer.apply(&h)?;
        }
        Ok(h.into_vec())
    }

    pub fn forward(&self, input: &QueryInput) -> Result<ForwardPass> {
        if self.gnn.is_empty() {
            return Err(Error::InvalidArgument("model has no GNN layers".into()));
        }
        let mut h = input.x_aug.clone();
        let mut gnn_caches = Vec::with_capacity(self.gnn.len());
        for layer in &self.gnn {
            let (out, cache) = layer.forward(&h, &input.graph)?;
            gnn_caches.push(cache);
            h = out;
        }
        let h_loc = h;
        if input.x.cols() != self.config.input_dim {
            return Err(Error::Shape(alloc::format!(
                "expected {} feature columns, got {}",
                self.config.input_dim,
                input.x.cols()
            )));
        }
        let (h_ind, ind_caches) = forward_stack(&self.individual, &input.x)?;
        let (s, scorer_caches) = forward_stack(&self.scorer, &h_ind.hconcat(&h_loc))?;
        Ok(ForwardPass { h_ind, h_loc, scores: s.into_vec(), gnn_caches, ind_caches, scorer_caches })
    }

    pub fn scores(&self, input: &QueryInput) -> Result<Vec<f64>> {
        let h_loc = self.forward_local(&input.x_aug, &input.graph)?;
        let h_ind = self.forward_individual(&input.x)?;
        self.score(&h_ind, &h_loc)
    }

    /// Gradient of `Σ_i ds_i · s_i` with respect to every parameter.
    pub fn backward(&self, input: &QueryInput, pass: &ForwardPass, ds: &[f64]) -> Result<RerankModel> {
        if ds.len() != pass.scores.len() {
            return Err(Error::Shape(alloc::format!("{} score gradients for {} scores", ds.len(), pass.scores.len())));
        }
        let d_s = Matrix::from_vec(ds.len(), 1, ds.to_vec())?;
        let (scorer, d_h) = backward_stack(&self.scorer, &pass.scorer_caches, &d_s);
        let (d_ind, d_loc) = d_h.split_cols(pass.h_ind.cols());
        let (individual, _) = backward_stack(&self.individual, &pass.ind_caches, &d_ind);
        let mut gnn = Vec::with_capacity(self.gnn.len());
        let mut d = d_loc;
        for (layer, cache) in self.gnn.iter().zip(&pass.gnn_caches).rev() {
            let (g, d_in) = layer.backward(&input.graph, cache, &d)?;
            gnn.push(g);
            d = d_in;
        }
        gnn.reverse();
        Ok(RerankModel { config: self.config.clone(), gnn, individual, scorer })
    }

    /// Sorted run rows for one query.
    pub fn rerank(&self, sub: &QuerySubgraph, input: &QueryInput, tag: &str) -> Result<Vec<RunRow>> {
        let scores = self.scores(input)?;
        model_rows(sub, &scores, tag)
    }

    pub fn param_count(&self) -> usize {
        let mut n = 0;
        self.for_each("", &mut |_, p| n += p.len());
        n
    }

    pub fn param_blocks(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        self.for_each("", &mut |name, p| out.push((name.to_string(), p.len())));
        out
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.for_each("", &mut |_, p| out.extend_from_slice(p));
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape(alloc::format!("{} values for {} parameters", flat.len(), self.param_count())));
        }
        let mut at = 0;
        self.for_each_mut("", &mut |_, p| {
            p.copy_from_slice(&flat[at..at + p.len()]);
            at += p.len();
        });
        Ok(())
    }
}

impl Parameters for RerankModel {
    fn for_each(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        for (i, l) in self.gnn.iter().enumerate() {
            l.for_each(&alloc::format!("{prefix}gnn{i}."), f);
        }
        for (i, l) in self.individual.iter().enumerate() {
            l.for_each(&alloc::format!("{prefix}individual{i}"), f);
        }
        for (i, l) in self.scorer.iter().enumerate() {
            l.for_each(&alloc::format!("{prefix}scorer{i}"), f);
        }
    }

    fn for_each_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        for (i, l) in self.gnn.iter_mut().enumerate() {
            l.for_each_mut(&alloc::format!("{prefix}gnn{i}."), f);
        }
        for (i, l) in self.individual.iter_mut().enumerate() {
            l.for_each_mut(&alloc::format!("{prefix}individual{i}"), f);
        }
        for (i, l) in self.scorer.iter_mut().enumerate() {
            l.for_each_mut(&alloc::format!("{prefix}scorer{i}"), f);
        }
    }
}

/// Indices ordered by score descending, ties by doc id ascending.
pub fn sort_by_score<S: AsRef<str>>(doc_ids: &[S], scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| doc_ids[a].as_ref().cmp(doc_ids[b].as_ref()))
    });
    order
}

pub(crate) fn model_rows(sub: &QuerySubgraph, scores: &[f64], tag: &str) -> Result<Vec<RunRow>> {
    if scores.len() != sub.len() {
        return Err(Error::Shape(alloc::format!("{} scores for {} nodes", scores.len(), sub.len())));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite(sub.nodes[i].clone()));
    }
    let order = sort_by_score(&sub.nodes, scores);
    Ok(RunFile::ranked_rows(&sub.query_id, order.iter().map(|&i| (sub.nodes[i].as_str(), scores[i])), tag))
}
