//! Glue between artifacts: candidate lists, per-query model inputs, and
//! whole-run re-ranking.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gnrr_core::ablation::{self, AblationRow, Corruption};
use gnrr_core::corpus::{Collection, QuerySet, Qrels, RunFile};
use gnrr_core::embeddings::EmbeddingStore;
use gnrr_core::features::{augment_with_rank, node_features};
use gnrr_core::gnn::{QueryInput, RerankModel};
use gnrr_core::graph::{CorpusGraph, QuerySubgraph};
use gnrr_core::lexical::{InvertedIndex, ScoredList};
use gnrr_core::synth::SynthCorpus;
use gnrr_core::training::PreparedQuery;

use crate::io;

pub const RUN_TAG: &str = "gnrr";

pub fn retrieve_all(index: &InvertedIndex, queries: &QuerySet, k: usize, tag: &str) -> Result<RunFile> {
    let mut rows = Vec::new();
    for (qid, text) in queries.iter() {
        let list = index.retrieve_text(qid, text, k)?;
        rows.extend(RunFile::ranked_rows(qid, list.entries.iter().map(|(d, s)| (d.as_str(), *s)), tag));
    }
    Ok(RunFile::new(rows))
}

/// First-stage candidates per query, in run order.
pub fn candidates(run: &RunFile) -> BTreeMap<String, ScoredList> {
    run.by_query()
        .into_iter()
        .map(|(q, rows)| {
            let entries = rows.iter().map(|r| (r.doc_id.clone(), r.score)).collect();
            (q.to_string(), ScoredList { query_id: q.to_string(), entries })
        })
        .collect()
}

/// Subgraph and model input for one query.
pub fn query_input(
    model: &RerankModel,
    graph: &CorpusGraph,
    store: &EmbeddingStore,
    list: &ScoredList,
) -> Result<(QuerySubgraph, QueryInput)> {
    let qid = &list.query_id;
    let z_q = store.require(qid).with_context(|| format!("embedding for query {qid}"))?;
    let sub = graph.induce(list).with_context(|| format!("inducing subgraph for query {qid}"))?;
    let x = node_features(&z_q, &sub, store)?;
    let x_aug = augment_with_rank(&x, &sub)?;
    let input = model.prepare(&sub, x, x_aug)?;
    Ok((sub, input))
}

/// Everything needed to score the queries of `queries` that appear in
/// the run. Queries absent from the run have nothing to re-rank and are
/// skipped.
pub struct Inputs<'a> {
    pub run: &'a RunFile,
    pub graph: &'a CorpusGraph,
    pub store: &'a EmbeddingStore,
    pub queries: &'a QuerySet,
}

impl Inputs<'_> {
    fn lists(&self) -> Vec<ScoredList> {
        let mut by_query = candidates(self.run);
        self.queries.iter().filter_map(|(q, _)| by_query.remove(q)).collect()
    }

    pub fn prepare(&self, model: &RerankModel, qrels: &Qrels) -> Result<Vec<PreparedQuery>> {
        self.lists()
            .iter()
            .map(|list| {
                let (sub, input) = query_input(model, self.graph, self.store, list)?;
                Ok(PreparedQuery::new(model, sub, input.x, input.x_aug, qrels)?)
            })
            .collect()
    }

    pub fn rerank(&self, model: &RerankModel, tag: &str) -> Result<RunFile> {
        let mut rows = Vec::new();
        for list in self.lists() {
            let (sub, input) = query_input(model, self.graph, self.store, &list)?;
            rows.extend(model.rerank(&sub, &input, tag)?);
        }
        Ok(RunFile::new(rows))
    }

    pub fn ablate(&self, model: &RerankModel, qrels: &Qrels, modes: &[Corruption], ks: &[usize]) -> Result<Vec<AblationRow>> {
        let prepared = self.prepare(model, qrels)?;
        Ok(ablation::ablation_report(model, &prepared, qrels, modes, ks)?)
    }
}

/// Comma-separated positive integers, e.g. `3,10`.
pub fn parse_ks(s: &str) -> Result<Vec<usize>> {
    let ks: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().with_context(|| format!("bad cutoff {p:?}")))
        .collect::<Result<_>>()?;
    if ks.contains(&0) {
        bail!("cutoffs must be positive");
    }
    Ok(ks)
}

/// Train/validation/test sizes; the last part may be omitted and then
/// takes the remaining queries.
pub fn parse_split(s: &str, total: usize) -> Result<[usize; 3]> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().with_context(|| format!("bad split size {p:?}")))
        .collect::<Result<_>>()?;
    let split = match parts[..] {
        [a, b, c] => [a, b, c],
        [a, b] if a + b <= total => [a, b, total - a - b],
        _ => bail!("split needs two or three sizes"),
    };
    if split.iter().sum::<usize>() != total {
        bail!("split {s} does not add up to {total} queries");
    }
    Ok(split)
}

/// Writes a synthetic corpus: `collection.tsv`, `queries.tsv`,
/// `qrels.txt`, `embeddings.emb` (documents and queries), `clusters.tsv`
/// (planted cluster of every document and target of every query), plus
/// `{train,val,test}.queries.tsv` / `.qrels.txt` when a split is given.
pub fn write_synth(corpus: &SynthCorpus, dir: &Path, split: Option<[usize; 3]>) -> Result<()> {
    io::write_bytes(&dir.join("collection.tsv"), corpus.collection.to_tsv().as_bytes())?;
    io::write_bytes(&dir.join("queries.tsv"), corpus.queries.to_tsv().as_bytes())?;
    io::write_bytes(&dir.join("qrels.txt"), corpus.qrels.to_text().as_bytes())?;
    io::write_bytes(&dir.join("embeddings.emb"), &corpus.embeddings.to_bytes()?)?;
    let mut clusters = String::new();
    for (i, (id, _)) in corpus.collection.iter().enumerate() {
        clusters.push_str(&format!("{id}\t{}\n", corpus.doc_cluster[i]));
    }
    for (i, (id, _)) in corpus.queries.iter().enumerate() {
        clusters.push_str(&format!("{id}\t{}\n", corpus.query_cluster[i]));
    }
    io::write_bytes(&dir.join("clusters.tsv"), clusters.as_bytes())?;
    if let Some(split) = split {
        let all: Vec<(String, String)> = corpus.queries.iter().map(|(q, t)| (q.to_string(), t.to_string())).collect();
        let mut start = 0;
        for (name, size) in ["train", "val", "test"].into_iter().zip(split) {
            let part = &all[start..start + size];
            start += size;
            let queries = QuerySet::from_pairs(part.to_vec())?;
            let qrels = corpus.qrels.restrict(part.iter().map(|(q, _)| q.as_str()));
            io::write_bytes(&dir.join(format!("{name}.queries.tsv")), queries.to_tsv().as_bytes())?;
            io::write_bytes(&dir.join(format!("{name}.qrels.txt")), qrels.to_text().as_bytes())?;
        }
    }
    Ok(())
}

/// Document ids used as graph nodes: the collection's when given,
/// otherwise every id in the store.
pub fn graph_ids(store: &EmbeddingStore, collection: Option<&Collection>) -> Vec<String> {
    match collection {
        Some(c) => c.iter().map(|(id, _)| id.to_string()).collect(),
        None => store.ids().to_vec(),
    }
}
