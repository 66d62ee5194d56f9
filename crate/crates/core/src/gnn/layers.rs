//! The five message-passing layer kinds.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::index;
use rand::Rng;

use super::aggregate::*;
use super::dense::{glorot, leaky_relu, leaky_relu_derivative, Activation, DenseCache, DenseLayer};
use super::Parameters;
use crate::graph::Adjacency;
use crate::linalg::{axpy, dot, Matrix};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LayerKind {
    Gcn,
    Sage,
    Gat,
    Gin,
    Signed,
}

impl LayerKind {
    pub const ALL: [LayerKind; 5] = [LayerKind::Gcn, LayerKind::Sage, LayerKind::Gat, LayerKind::Gin, LayerKind::Signed];

    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Gcn => "gcn",
            LayerKind::Sage => "sage",
            LayerKind::Gat => "gat",
            LayerKind::Gin => "gin",
            LayerKind::Signed => "signed",
        }
    }

    pub fn activation(self) -> Activation {
        match self {
            LayerKind::Gat => Activation::Elu,
            _ => Activation::Relu,
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LayerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LayerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown layer kind `{s}`")))
    }
}

/// The structure a layer aggregates over: symmetric positive edges and,
/// for signed layers, sampled negative neighbours.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LayerGraph {
    pub positive: Adjacency,
    pub negative: Adjacency,
}

impl LayerGraph {
    pub fn new(positive: Adjacency) -> Self {
        let n = positive.n_nodes();
        Self { positive, negative: Adjacency::from_lists(&vec![Vec::new(); n]) }
    }

    pub fn with_negatives(positive: Adjacency, negative: Adjacency) -> Self {
        Self { positive, negative }
    }

    pub fn n_nodes(&self) -> usize {
        self.positive.n_nodes()
    }
}

/// For each node, up to `per_node` distinct non-neighbours (excluding the
/// node itself), drawn without replacement from a stream keyed by `seed`.
pub fn sample_negatives(positive: &Adjacency, per_node: usize, seed: u64) -> Adjacency {
    let n = positive.n_nodes();
    let mut lists = Vec::with_capacity(n);
    for i in 0..n {
        let nbrs = positive.of(i);
        let pool: Vec<u32> = (0..n as u32).filter(|&j| j as usize != i && !nbrs.contains(&j)).collect();
        let take = per_node.min(pool.len());
        let mut stream = rng::stream(seed, i as u64);
        let mut picked: Vec<u32> = index::sample(&mut stream, pool.len(), take).into_iter().map(|p| pool[p]).collect();
        picked.sort_unstable();
        lists.push(picked);
    }
    Adjacency::from_lists(&lists)
}

fn check_rows(h: &Matrix, graph: &LayerGraph) -> Result<()> {
    if h.rows() != graph.n_nodes() {
        return Err(Error::Shape(alloc::format!("{} feature rows for {} graph nodes", h.rows(), graph.n_nodes())));
    }
    Ok(())
}

/// `act(Â H Wᵀ + b)` with the symmetric-normalized self-looped adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnLayer {
    pub dense: DenseLayer,
}

/// `act(W [h_i ‖ mean_{j∈Γ(i)} h_j] + b)`; the left half of `W` is the
/// self weight, the right half the neighbour weight.
#[derive(Debug, Clone, PartialEq)]
pub struct SageLayer {
    pub dense: DenseLayer,
}

/// Single-head attention over `Γ(i) ∪ {i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GatLayer {
    pub weight: Matrix,
    pub att_src: Vec<f64>,
    pub att_dst: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// `MLP((1 + ε) h_i + Σ_{j∈Γ(i)} h_j)` with a two-layer MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct GinLayer {
    pub eps: f64,
    pub hidden: DenseLayer,
    pub output: DenseLayer,
}

/// Positive half over graph edges, negative half over sampled
/// non-edges, concatenated.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedLayer {
    pub pos: DenseLayer,
    pub neg: DenseLayer,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GnnLayer {
    Gcn(GcnLayer),
    Sage(SageLayer),
    Gat(GatLayer),
    Gin(GinLayer),
    Signed(SignedLayer),
}

#[derive(Debug, Clone)]
pub enum LayerCache {
    Gcn(DenseCache),
    Sage(DenseCache),
    Gat(GatCache),
    Gin { input: Matrix, hidden: DenseCache, output: DenseCache },
    Signed { pos: DenseCache, neg: DenseCache },
}

#[derive(Debug, Clone)]
pub struct GatCache {
    input: Matrix,
    projected: Matrix,
    /// per node, attention over `[i, Γ(i)...]`
    alpha: Vec<Vec<f64>>,
    logits: Vec<Vec<f64>>,
    pre: Matrix,
}

impl GatLayer {
    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let att = glorot(2, outputs, outputs, 1, rng);
        Self {
            weight: glorot(outputs, inputs, inputs, outputs, rng),
            att_src: att.row(0).to_vec(),
            att_dst: att.row(1).to_vec(),
            bias: vec![0.0; outputs],
            activation: Activation::Elu,
        }
    }

    fn support(adj: &Adjacency, i: usize) -> impl Iterator<Item = usize> + '_ {
        core::iter::once(i).chain(adj.of(i).iter().map(|&j| j as usize))
    }

    fn attend(&self, projected: &Matrix, adj: &Adjacency) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = projected.rows();
        let src: Vec<f64> = (0..n).map(|i| dot(&self.att_src, projected.row(i))).collect();
        let dst: Vec<f64> = (0..n).map(|i| dot(&self.att_dst, projected.row(i))).collect();
        let mut alpha = Vec::with_capacity(n);
        let mut logits = Vec::with_capacity(n);
        for i in 0..n {
            let u: Vec<f64> = Self::support(adj, i).map(|j| src[i] + dst[j]).collect();
            let e: Vec<f64> = u.iter().map(|&x| leaky_relu(x)).collect();
            let max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = e.iter().map(|&x| libm::exp(x - max)).collect();
            let z: f64 = w.iter().sum();
            alpha.push(w.into_iter().map(|x| x / z).collect());
            logits.push(u);
        }
        (alpha, logits)
    }

    /// Attention coefficients per node over `[i, Γ(i)...]`.
    pub fn attention(&self, h: &Matrix, graph: &LayerGraph) -> Result<Vec<Vec<f64>>> {
        check_rows(h, graph)?;
        self.check_input(h)?;
        Ok(self.attend(&h.matmul_t(&self.weight), &graph.positive).0)
    }

    fn check_input(&self, h: &Matrix) -> Result<()> {
        if h.cols() != self.weight.cols() {
            return Err(Error::Shape(alloc::format!("gat layer expects {} inputs, got {}", self.weight.cols(), h.cols())));
        }
        Ok(())
    }

    fn forward(&self, h: &Matrix, graph: &LayerGraph) -> Result<(Matrix, GatCache)> {
        self.check_input(h)?;
        let adj = &graph.positive;
        let projected = h.matmul_t(&self.weight);
        let (alpha, logits) = self.attend(&projected, adj);
        let mut pre = Matrix::zeros(h.rows(), self.weight.rows());
        for i in 0..h.rows() {
            let row = pre.row_mut(i);
            row.copy_from_slice(&self.bias);
            for (a, j) in alpha[i].iter().zip(Self::support(adj, i)) {
                axpy(row, *a, projected.row(j));
            }
        }
        let act = self.activation;
        let out = Matrix::from_fn(pre.rows(), pre.cols(), |r, c| act.apply(pre.get(r, c)));
        Ok((out, GatCache { input: h.clone(), projected, alpha, logits, pre }))
    }

    fn backward(&self, graph: &LayerGraph, cache: &GatCache, d_out: &Matrix) -> (GatLayer, Matrix) {
        let adj = &graph.positive;
        let n = d_out.rows();
        let act = self.activation;
        let d_pre = Matrix::from_fn(n, d_out.cols(), |r, c| d_out.get(r, c) * act.derivative(cache.pre.get(r, c)));
        let p = &cache.projected;
        let mut d_proj = Matrix::zeros(n, p.cols());
        let mut d_src = vec![0.0; n];
        let mut d_dst = vec![0.0; n];
        for i in 0..n {
            let g = d_pre.row(i);
            let alpha = &cache.alpha[i];
            let d_alpha: Vec<f64> = Self::support(adj, i).map(|j| dot(g, p.row(j))).collect();
            for (a, j) in alpha.iter().zip(Self::support(adj, i)) {
                axpy(d_proj.row_mut(j), *a, g);
            }
            let mean: f64 = alpha.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
            for (k, j) in Self::support(adj, i).enumerate() {
                let d_logit = alpha[k] * (d_alpha[k] - mean) * leaky_relu_derivative(cache.logits[i][k]);
                d_src[i] += d_logit;
                d_dst[j] += d_logit;
            }
        }
        let mut g_src = vec![0.0; p.cols()];
        let mut g_dst = vec![0.0; p.cols()];
        for i in 0..n {
            axpy(&mut g_src, d_src[i], p.row(i));
            axpy(&mut g_dst, d_dst[i], p.row(i));
            let row = d_proj.row_mut(i);
            axpy(row, d_src[i], &self.att_src);
            axpy(row, d_dst[i], &self.att_dst);
        }
        let grad = GatLayer {
            weight: d_proj.t_matmul(&cache.input),
            att_src: g_src,
            att_dst: g_dst,
            bias: d_pre.column_sums(),
            activation: self.activation,
        };
        (grad, d_proj.matmul(&self.weight))
    }
}

impl GnnLayer {
    /// A freshly initialized layer mapping `inputs` to `outputs` columns.
    pub fn init<R: Rng + ?Sized>(kind: LayerKind, inputs: usize, outputs: usize, rng: &mut R) -> Result<Self> {
        let act = kind.activation();
        Ok(match kind {
            LayerKind::Gcn => GnnLayer::Gcn(GcnLayer { dense: DenseLayer::init(inputs, outputs, act, rng) }),
            LayerKind::Sage => GnnLayer::Sage(SageLayer { dense: DenseLayer::init(2 * inputs, outputs, act, rng) }),
            LayerKind::Gat => GnnLayer::Gat(GatLayer::init(inputs, outputs, rng)),
            LayerKind::Gin => GnnLayer::Gin(GinLayer {
                eps: 0.0,
                hidden: DenseLayer::init(inputs, outputs, Activation::Relu, rng),
                output: DenseLayer::init(outputs, outputs, act, rng),
            }),
            LayerKind::Signed => {
                if outputs % 2 != 0 || outputs == 0 {
                    return Err(Error::InvalidArgument(alloc::format!(
                        "signed layers need an even output width, got {outputs}"
                    )));
                }
                GnnLayer::Signed(SignedLayer {
                    pos: DenseLayer::init(2 * inputs, outputs / 2, act, rng),
                    neg: DenseLayer::init(2 * inputs, outputs / 2, act, rng),
                })
            }
        })
    }

    pub fn kind(&self) -> LayerKind {
        match self {
            GnnLayer::Gcn(_) => LayerKind::Gcn,
            GnnLayer::Sage(_) => LayerKind::Sage,
            GnnLayer::Gat(_) => LayerKind::Gat,
            GnnLayer::Gin(_) => LayerKind::Gin,
            GnnLayer::Signed(_) => LayerKind::Signed,
        }
    }

    pub fn outputs(&self) -> usize {
        match self {
            GnnLayer::Gcn(l) => l.dense.outputs(),
            GnnLayer::Sage(l) => l.dense.outputs(),
            GnnLayer::Gat(l) => l.weight.rows(),
            GnnLayer::Gin(l) => l.output.outputs(),
            GnnLayer::Signed(l) => l.pos.outputs() + l.neg.outputs(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.for_each_mut("", &mut |_, p| p.iter_mut().for_each(|v| *v = 0.0));
        z
    }

    pub fn forward(&self, h: &Matrix, graph: &LayerGraph) -> Result<(Matrix, LayerCache)> {
        check_rows(h, graph)?;
        Ok(match self {
            GnnLayer::Gcn(l) => {
                let (out, c) = l.dense.forward(&gcn_propagate(h, &graph.positive))?;
                (out, LayerCache::Gcn(c))
            }
            GnnLayer::Sage(l) => {
                let (out, c) = l.dense.forward(&h.hconcat(&mean_neighbors(h, &graph.positive)))?;
                (out, LayerCache::Sage(c))
            }
            GnnLayer::Gat(l) => {
                let (out, c) = l.forward(h, graph)?;
                (out, LayerCache::Gat(c))
            }
            GnnLayer::Gin(l) => {
                let mut agg = sum_neighbors(h, &graph.positive);
                axpy(agg.as_mut_slice(), 1.0 + l.eps, h.as_slice());
                let (z, hidden) = l.hidden.forward(&agg)?;
                let (out, output) = l.output.forward(&z)?;
                (out, LayerCache::Gin { input: h.clone(), hidden, output })
            }
            GnnLayer::Signed(l) => {
                let (p, pos) = l.pos.forward(&h.hconcat(&mean_neighbors(h, &graph.positive)))?;
                let (q, neg) = l.neg.forward(&h.hconcat(&mean_neighbors(h, &graph.negative)))?;
                (p.hconcat(&q), LayerCache::Signed { pos, neg })
            }
        })
    }

    pub fn apply(&self, h: &Matrix, graph: &LayerGraph) -> Result<Matrix> {
        self.forward(h, graph).map(|(out, _)| out)
    }

    /// Parameter gradient and `∂/∂H` given `∂/∂output`.
    pub fn backward(&self, graph: &LayerGraph, cache: &LayerCache, d_out: &Matrix) -> Result<(GnnLayer, Matrix)> {
        let n = d_out.rows();
        Ok(match (self, cache) {
            (GnnLayer::Gcn(l), LayerCache::Gcn(c)) => {
                let (g, d_agg) = l.dense.backward(c, d_out);
                (GnnLayer::Gcn(GcnLayer { dense: g }), gcn_propagate_adjoint(&d_agg, &graph.positive))
            }
            (GnnLayer::Sage(l), LayerCache::Sage(c)) => {
                let (g, d_cat) = l.dense.backward(c, d_out);
                let f = d_cat.cols() / 2;
                let (mut d_h, d_mean) = d_cat.split_cols(f);
                d_h.add_assign(&mean_neighbors_adjoint(&d_mean, &graph.positive, n));
                (GnnLayer::Sage(SageLayer { dense: g }), d_h)
            }
            (GnnLayer::Gat(l), LayerCache::Gat(c)) => {
                let (g, d_h) = l.backward(graph, c, d_out);
                (GnnLayer::Gat(g), d_h)
            }
            (GnnLayer::Gin(l), LayerCache::Gin { input, hidden, output }) => {
                let (g_out, d_z) = l.output.backward(output, d_out);
                let (g_hidden, d_agg) = l.hidden.backward(hidden, &d_z);
                let d_eps = dot(d_agg.as_slice(), input.as_slice());
                let mut d_h = sum_neighbors_adjoint(&d_agg, &graph.positive);
                axpy(d_h.as_mut_slice(), 1.0 + l.eps, d_agg.as_slice());
                (GnnLayer::Gin(GinLayer { eps: d_eps, hidden: g_hidden, output: g_out }), d_h)
            }
            (GnnLayer::Signed(l), LayerCache::Signed { pos, neg }) => {
                let (d_p, d_q) = d_out.split_cols(l.pos.outputs());
                let (g_pos, d_pos_in) = l.pos.backward(pos, &d_p);
                let (g_neg, d_neg_in) = l.neg.backward(neg, &d_q);
                let f = d_pos_in.cols() / 2;
                let (mut d_h, d_pmean) = d_pos_in.split_cols(f);
                let (d_h2, d_nmean) = d_neg_in.split_cols(f);
                d_h.add_assign(&d_h2);
                d_h.add_assign(&mean_neighbors_adjoint(&d_pmean, &graph.positive, n));
                d_h.add_assign(&mean_neighbors_adjoint(&d_nmean, &graph.negative, n));
                (GnnLayer::Signed(SignedLayer { pos: g_pos, neg: g_neg }), d_h)
            }
            _ => return Err(Error::Shape("layer cache does not match layer kind".into())),
        })
    }
}

impl Parameters for GnnLayer {
    fn for_each(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        match self {
            GnnLayer::Gcn(l) => l.dense.for_each(&alloc::format!("{prefix}gcn"), f),
            GnnLayer::Sage(l) => l.dense.for_each(&alloc::format!("{prefix}sage"), f),
            GnnLayer::Gat(l) => {
                f(&alloc::format!("{prefix}gat.weight"), l.weight.as_slice());
                f(&alloc::format!("{prefix}gat.att_src"), &l.att_src);
                f(&alloc::format!("{prefix}gat.att_dst"), &l.att_dst);
                f(&alloc::format!("{prefix}gat.bias"), &l.bias);
            }
            GnnLayer::Gin(l) => {
                f(&alloc::format!("{prefix}gin.eps"), core::slice::from_ref(&l.eps));
                l.hidden.for_each(&alloc::format!("{prefix}gin.mlp0"), f);
                l.output.for_each(&alloc::format!("{prefix}gin.mlp1"), f);
            }
            GnnLayer::Signed(l) => {
                l.pos.for_each(&alloc::format!("{prefix}signed.pos"), f);
                l.neg.for_each(&alloc::format!("{prefix}signed.neg"), f);
            }
        }
    }

    fn for_each_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        match self {
            GnnLayer::Gcn(l) => l.dense.for_each_mut(&alloc::format!("{prefix}gcn"), f),
            GnnLayer::Sage(l) => l.dense.for_each_mut(&alloc::format!("{prefix}sage"), f),
            GnnLayer::Gat(l) => {
                f(&alloc::format!("{prefix}gat.weight"), l.weight.as_mut_slice());
                f(&alloc::format!("{prefix}gat.att_src"), &mut l.att_src);
                f(&alloc::format!("{prefix}gat.att_dst"), &mut l.att_dst);
                f(&alloc::format!("{prefix}gat.bias"), &mut l.bias);
            }
            GnnLayer::Gin(l) => {
                f(&alloc::format!("{prefix}gin.eps"), core::slice::from_mut(&mut l.eps));
                l.hidden.for_each_mut(&alloc::format!("{prefix}gin.mlp0"), f);
                l.output.for_each_mut(&alloc::format!("{prefix}gin.mlp1"), f);
            }
            GnnLayer::Signed(l) => {
                l.pos.for_each_mut(&alloc::format!("{prefix}signed.pos"), f);
                l.neg.for_each_mut(&alloc::format!("{prefix}signed.neg"), f);
            }
        }
    }
}
