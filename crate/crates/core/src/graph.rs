//! The semantic corpus graph and query-induced subgraphs.
//!
//! The corpus graph stores directed arcs: every document points at its
//! `min(c, N−1)` most cosine-similar other documents. A query subgraph
//! keeps the arcs whose endpoints are both candidates and then closes
//! them under reversal for message passing.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::codec::{Reader, Writer};
use crate::embeddings::EmbeddingStore;
use crate::lexical::ScoredList;
use crate::linalg::{dot, norm};
use crate::{Error, Result};

pub const DEFAULT_C: usize = 8;

const MAGIC: &str = "CGR1";

/// Exhaustive cosine neighbour search over a fixed id list.
///
/// Shared by the serial builder here and the parallel one in the `gnrr`
/// crate; `neighbors_of` only reads.
pub struct NeighborSearch {
    ids: Vec<String>,
    unit: Vec<f64>,
    dim: usize,
    /// position of each node in lexicographic id order
    id_rank: Vec<u32>,
}

impl NeighborSearch {
    pub fn new(store: &EmbeddingStore, ids: &[String]) -> Result<Self> {
        if ids.len() < 2 {
            return Err(Error::InvalidArgument("corpus graph needs at least 2 documents".into()));
        }
        let dim = store.dim();
        let mut unit = Vec::with_capacity(ids.len() * dim);
        for id in ids {
            let v = store.require(id)?;
            let n = norm(&v);
            if n == 0.0 {
                return Err(Error::ZeroNorm);
            }
            unit.extend(v.iter().map(|x| x / n));
        }
        let mut order: Vec<u32> = (0..ids.len() as u32).collect();
        order.sort_by(|&a, &b| ids[a as usize].cmp(&ids[b as usize]));
        let mut id_rank = alloc::vec![0u32; ids.len()];
        for (rank, &node) in order.iter().enumerate() {
            id_rank[node as usize] = rank as u32;
        }
        for w in order.windows(2) {
            if ids[w[0] as usize] == ids[w[1] as usize] {
                return Err(Error::DuplicateId(ids[w[0] as usize].clone()));
            }
        }
        Ok(Self { ids: ids.to_vec(), unit, dim, id_rank })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn vector(&self, i: usize) -> &[f64] {
        &self.unit[i * self.dim..(i + 1) * self.dim]
    }

    pub fn similarity(&self, a: usize, b: usize) -> f64 {
        dot(self.vector(a), self.vector(b))
    }

    /// The `k` most similar other nodes, similarity descending, ties by id.
    pub fn neighbors_of(&self, u: usize, k: usize) -> Vec<u32> {
        let k = k.min(self.len() - 1);
        // (sim, node) kept sorted best-first
        let mut best: Vec<(f64, u32)> = Vec::with_capacity(k + 1);
        let better = |a: &(f64, u32), b: &(f64, u32)| -> Ordering {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.id_rank[a.1 as usize].cmp(&self.id_rank[b.1 as usize]))
        };
        let zu = self.vector(u);
        for v in 0..self.len() {
            if v == u {
                continue;
            }
            let cand = (dot(zu, self.vector(v)), v as u32);
            if best.len() == k {
                if better(&cand, &best[k - 1]) != Ordering::Less {
                    continue;
                }
                best.pop();
            }
            let pos = best.partition_point(|b| better(b, &cand) == Ordering::Less);
            best.insert(pos, cand);
        }
        best.into_iter().map(|(_, v)| v).collect()
    }

    pub fn into_ids(self) -> Vec<String> {
        self.ids
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusGraph {
    c: usize,
    node_ids: Vec<String>,
    index: BTreeMap<String, u32>,
    neighbors: Vec<Vec<u32>>,
}

impl CorpusGraph {
    /// Exact k-NN graph by cosine similarity, built serially.
    pub fn build(store: &EmbeddingStore, ids: &[String], c: usize) -> Result<Self> {
        if c == 0 {
            return Err(Error::InvalidArgument("c must be at least 1".into()));
        }
        let search = NeighborSearch::new(store, ids)?;
        let lists = (0..search.len()).map(|u| search.neighbors_of(u, c)).collect();
        Self::from_lists(c, search.into_ids(), lists)
    }

    /// Assembles a graph from precomputed neighbour lists, checking the
    /// regularity invariants.
    pub fn from_lists(c: usize, node_ids: Vec<String>, neighbors: Vec<Vec<u32>>) -> Result<Self> {
        let n = node_ids.len();
        if n < 2 {
            return Err(Error::InvalidArgument("corpus graph needs at least 2 documents".into()));
        }
        if neighbors.len() != n {
            return Err(Error::Shape(alloc::format!("{} neighbour lists for {n} nodes", neighbors.len())));
        }
        let degree = c.min(n - 1);
        let mut index = BTreeMap::new();
        for (i, id) in node_ids.iter().enumerate() {
            if index.insert(id.clone(), i as u32).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        for (u, list) in neighbors.iter().enumerate() {
            if list.len() != degree {
                return Err(Error::Malformed(alloc::format!("node {u} has degree {}, expected {degree}", list.len())));
            }
            for (i, &v) in list.iter().enumerate() {
                if v as usize >= n || v as usize == u || list[..i].contains(&v) {
                    return Err(Error::Malformed(alloc::format!("bad neighbour {v} of node {u}")));
                }
            }
        }
        Ok(Self { c, node_ids, index, neighbors })
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.c.min(self.len() - 1)
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).map(|&i| i as usize)
    }

    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.neighbors[node]
    }

    pub fn arc_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }

    /// Restricts the graph to a query's candidates (kept in first-stage
    /// order) and symmetrizes the surviving arcs.
    pub fn induce(&self, candidates: &ScoredList) -> Result<QuerySubgraph> {
        let mut local: BTreeMap<u32, u32> = BTreeMap::new();
        let mut corpus_index = Vec::with_capacity(candidates.len());
        for (i, doc) in candidates.doc_ids().enumerate() {
            let g = self.index.get(doc).ok_or_else(|| Error::UnknownId(doc.to_string()))?;
            if local.insert(*g, i as u32).is_some() {
                return Err(Error::DuplicateId(doc.to_string()));
            }
            corpus_index.push(*g);
        }
        let mut arcs = Vec::new();
        for (i, &g) in corpus_index.iter().enumerate() {
            for v in &self.neighbors[g as usize] {
                if let Some(&j) = local.get(v) {
                    arcs.push((i as u32, j));
                }
            }
        }
        Ok(QuerySubgraph::new(
            candidates.query_id.clone(),
            candidates.doc_ids().map(String::from).collect(),
            arcs,
        ))
    }

    /// `CGR1`, N (u32), c (u32), u16-prefixed UTF-8 ids, then
    /// `N × min(c, N−1)` u32 neighbour indices, all little-endian.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new();
        w.bytes(MAGIC.as_bytes());
        w.len_u32(self.len())?;
        w.len_u32(self.c)?;
        for id in &self.node_ids {
            w.str16(id)?;
        }
        for list in &self.neighbors {
            for &v in list {
                w.u32(v);
            }
        }
        Ok(w.finish())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(MAGIC)?;
        let n = r.u32()? as usize;
        let c = r.u32()? as usize;
        if n < 2 || c == 0 {
            return Err(Error::Malformed(alloc::format!("N={n}, c={c}")));
        }
        let ids = (0..n).map(|_| r.str16()).collect::<Result<Vec<_>>>()?;
        let degree = c.min(n - 1);
        let mut lists = Vec::with_capacity(n);
        for _ in 0..n {
            lists.push((0..degree).map(|_| r.u32()).collect::<Result<Vec<_>>>()?);
        }
        r.expect_end()?;
        Self::from_lists(c, ids, lists)
    }
}

/// A query's candidates and the corpus arcs among them.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySubgraph {
    pub query_id: String,
    /// candidate doc ids in first-stage order
    pub nodes: Vec<String>,
    /// kept corpus arcs (local indices), before symmetrization
    pub arcs: Vec<(u32, u32)>,
    /// `arcs` closed under reversal, sorted, duplicate-free
    pub edges: Vec<(u32, u32)>,
    /// 1-based first-stage rank per node
    pub bm25_rank: Vec<u32>,
}

impl QuerySubgraph {
    pub fn new(query_id: String, nodes: Vec<String>, arcs: Vec<(u32, u32)>) -> Self {
        let mut edges: Vec<(u32, u32)> = arcs.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
        edges.sort_unstable();
        edges.dedup();
        let bm25_rank = (1..=nodes.len() as u32).collect();
        Self { query_id, nodes, arcs, edges, bm25_rank }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::from_edges(self.len(), &self.edges)
    }
}

/// Compressed neighbour lists: `targets[offsets[i]..offsets[i + 1]]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Adjacency {
    /// Edges are `(source, target)`; list order follows edge order.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Self {
        let mut counts = alloc::vec![0usize; n + 1];
        for &(a, _) in edges {
            counts[a as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut targets = alloc::vec![0u32; edges.len()];
        for &(a, b) in edges {
            targets[fill[a as usize]] = b;
            fill[a as usize] += 1;
        }
        Self { offsets, targets }
    }

    pub fn from_lists(lists: &[Vec<u32>]) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        for l in lists {
            targets.extend_from_slice(l);
            offsets.push(targets.len());
        }
        Self { offsets, targets }
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    #[inline]
    pub fn of(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn n_edges(&self) -> usize {
        self.targets.len()
    }

    pub fn to_lists(&self) -> Vec<Vec<u32>> {
        (0..self.n_nodes()).map(|i| self.of(i).to_vec()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| alloc::format!("d{i}")).collect()
    }

    fn store(vectors: &[&[f32]]) -> EmbeddingStore {
        let mut s = EmbeddingStore::new(vectors[0].len());
        for (i, v) in vectors.iter().enumerate() {
            s.insert(&alloc::format!("d{i}"), v).unwrap();
        }
        s
    }

    #[test]
    fn degree_is_capped() {
        let s = store(&[&[1.0, 0.0], &[0.9, 0.1], &[0.0, 1.0], &[0.5, 0.5], &[-1.0, 0.2]]);
        let g = CorpusGraph::build(&s, &ids(5), 8).unwrap();
        for u in 0..5 {
            assert_eq!(g.neighbors(u).len(), 4);
            assert!(!g.neighbors(u).contains(&(u as u32)));
        }
        assert!(CorpusGraph::build(&s, &ids(1), 8).is_err());
    }

    #[test]
    fn duplicate_vectors_tie_by_id() {
        let s = store(&[&[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let g = CorpusGraph::build(&s, &ids(4), 2).unwrap();
        assert_eq!(g.neighbors(0), &[1, 2]);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.neighbors(2), &[0, 1]);
        assert_eq!(g.neighbors(3), &[0, 1]);
    }

    #[test]
    fn induce_small_example() {
        // arcs a→b, a→c, b→a, c→a
        let g = CorpusGraph::from_lists(
            2,
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![1, 2], vec![0, 2], vec![0, 1]],
        )
        .unwrap();
        let cands = ScoredList { query_id: "q".into(), entries: vec![("a".into(), 2.0), ("b".into(), 1.0)] };
        let sub = g.induce(&cands).unwrap();
        assert_eq!(sub.arcs, vec![(0, 1), (1, 0)]);
        assert_eq!(sub.edges, vec![(0, 1), (1, 0)]);
        assert_eq!(sub.bm25_rank, vec![1, 2]);

        let missing = ScoredList { query_id: "q".into(), entries: vec![("zz".into(), 1.0)] };
        assert_eq!(g.induce(&missing), Err(Error::UnknownId("zz".into())));
    }

    #[test]
    fn no_mutual_arcs_gives_isolated_nodes() {
        let g = CorpusGraph::from_lists(
            1,
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![vec![2], vec![3], vec![0], vec![1]],
        )
        .unwrap();
        let cands = ScoredList { query_id: "q".into(), entries: vec![("a".into(), 2.0), ("b".into(), 1.0)] };
        let sub = g.induce(&cands).unwrap();
        assert!(sub.edges.is_empty());
        assert_eq!(sub.adjacency().degree(0), 0);
    }

    #[test]
    fn bytes_round_trip() {
        let s = store(&[&[1.0, 0.0], &[0.9, 0.1], &[0.0, 1.0], &[0.5, 0.5]]);
        let g = CorpusGraph::build(&s, &ids(4), 2).unwrap();
        let bytes = g.to_bytes().unwrap();
        assert_eq!(CorpusGraph::from_bytes(&bytes).unwrap(), g);
        assert!(matches!(CorpusGraph::from_bytes(b"CGR0\0\0"), Err(Error::BadMagic { .. })));
        assert!(CorpusGraph::from_bytes(&bytes[..bytes.len() - 2]).is_err());
    }

    #[test]
    fn adjacency_lists() {
        let adj = Adjacency::from_edges(3, &[(0, 1), (0, 2), (2, 0)]);
        assert_eq!(adj.of(0), &[1, 2]);
        assert!(adj.of(1).is_empty());
        assert_eq!(adj.of(2), &[0]);
        assert_eq!(Adjacency::from_lists(&adj.to_lists()), adj);
    }
}
