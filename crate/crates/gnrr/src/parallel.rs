use anyhow::{Context, Result};
use gnrr_core::embeddings::EmbeddingStore;
use gnrr_core::graph::{CorpusGraph, NeighborSearch};
use rayon::prelude::*;

/// Thread pool of the requested size; `None` means available parallelism.
pub fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .context("starting thread pool")
}

/// Same graph as [`CorpusGraph::build`]; each node's neighbour search is
/// independent, so the lists are computed in parallel and assembled in
/// node order.
pub fn build_graph(store: &EmbeddingStore, ids: &[String], c: usize, pool: &rayon::ThreadPool) -> Result<CorpusGraph> {
    anyhow::ensure!(c > 0, "c must be at least 1");
    let search = NeighborSearch::new(store, ids)?;
    let lists: Vec<Vec<u32>> = pool.install(|| (0..search.len()).into_par_iter().map(|u| search.neighbors_of(u, c)).collect());
    Ok(CorpusGraph::from_lists(c, search.into_ids(), lists)?)
}
