use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use gnrr_core::corpus::{Collection, QuerySet, Qrels, RunFile};
use gnrr_core::embeddings::EmbeddingStore;
use gnrr_core::gnn::RerankModel;
use gnrr_core::graph::CorpusGraph;
use gnrr_core::lexical::InvertedIndex;

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes through a sibling temp file so a failed run never leaves a
/// half-written artifact behind.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", path.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))
}

fn parsed<T>(path: &Path, what: &str, f: impl FnOnce(&str) -> gnrr_core::Result<T>) -> Result<T> {
    let src = read_text(path)?;
    f(&src).with_context(|| format!("parsing {what} {}", path.display()))
}

fn decoded<T>(path: &Path, what: &str, f: impl FnOnce(&[u8]) -> gnrr_core::Result<T>) -> Result<T> {
    let bytes = read_bytes(path)?;
    f(&bytes).with_context(|| format!("decoding {what} {}", path.display()))
}

pub fn load_collection(path: &Path) -> Result<Collection> {
    parsed(path, "collection", Collection::parse)
}

pub fn load_queries(path: &Path) -> Result<QuerySet> {
    parsed(path, "queries", QuerySet::parse)
}

pub fn load_qrels(path: &Path) -> Result<Qrels> {
    parsed(path, "qrels", Qrels::parse)
}

pub fn load_run(path: &Path) -> Result<RunFile> {
    parsed(path, "run", RunFile::parse)
}

pub fn load_index(path: &Path) -> Result<InvertedIndex> {
    decoded(path, "index", InvertedIndex::from_bytes)
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingStore> {
    decoded(path, "embeddings", EmbeddingStore::from_bytes)
}

pub fn load_graph(path: &Path) -> Result<CorpusGraph> {
    decoded(path, "graph", CorpusGraph::from_bytes)
}

pub fn load_checkpoint(path: &Path) -> Result<RerankModel> {
    decoded(path, "checkpoint", RerankModel::from_checkpoint)
}

pub fn save_run(path: &Path, run: &RunFile) -> Result<()> {
    write_bytes(path, run.to_trec()?.as_bytes())
}
