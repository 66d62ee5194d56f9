//! Node features for a query subgraph: `x_i = z_q ⊙ z_{d_i}`, and the
//! rank-augmented variant fed to the GNN branch.

use alloc::vec::Vec;

use crate::embeddings::EmbeddingStore;
use crate::graph::QuerySubgraph;
use crate::linalg::Matrix;
use crate::{Error, Result};

/// One row per subgraph node, in subgraph order.
pub fn node_features(query: &[f64], sub: &QuerySubgraph, store: &EmbeddingStore) -> Result<Matrix> {
    if query.len() != store.dim() {
        return Err(Error::DimMismatch { expected: store.dim(), found: query.len() });
    }
    let mut data = Vec::with_capacity(sub.len() * query.len());
    for doc in &sub.nodes {
        let z = store.require(doc)?;
        data.extend(query.iter().zip(&z).map(|(a, b)| a * b));
    }
    Matrix::from_vec(sub.len(), query.len(), data)
}

/// `1 − (rank − 1) / max(n − 1, 1)`: 1.0 for the top candidate, 0.0 for
/// the last.
pub fn rank_feature(rank: u32, n: usize) -> f64 {
    let denom = n.saturating_sub(1).max(1) as f64;
    1.0 - f64::from(rank.saturating_sub(1)) / denom
}

/// Appends the normalized first-stage rank as column `m`.
pub fn augment_with_rank(x: &Matrix, sub: &QuerySubgraph) -> Result<Matrix> {
    if x.rows() != sub.len() || sub.bm25_rank.len() != sub.len() {
        return Err(Error::Shape(alloc::format!("{} feature rows for {} nodes", x.rows(), sub.len())));
    }
    let n = sub.len();
    let ranks = Matrix::from_fn(n, 1, |r, _| rank_feature(sub.bm25_rank[r], n));
    Ok(x.hconcat(&ranks))
}
