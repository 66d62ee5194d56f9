//! Synthetic benchmark with planted topic clusters.
//!
//! Documents belong to small clusters. Each cluster has its own topic
//! words (shared with its documents' text) and its own centroid direction
//! (shared with its documents' embeddings). A query targets one cluster;
//! each of its judged documents is drawn from that cluster with
//! probability `homophily` and from the whole corpus otherwise, so at
//! high homophily relevant documents are each other's graph neighbours.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Collection, QuerySet, Qrels};
use crate::embeddings::EmbeddingStore;
use crate::linalg::norm;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub docs: usize,
    pub queries: usize,
    pub dim: usize,
    pub homophily: f64,
    pub seed: u64,
    pub cluster_size: usize,
    /// tokens per document
    pub doc_len: usize,
    /// probability that a document token is one of its cluster's topic words
    pub topic_rate: f64,
    pub topic_words: usize,
    /// average number of clusters drawing on each topic word
    pub topic_share: usize,
    /// topic words of the target cluster in each query
    pub query_topic_words: usize,
    pub general_words: usize,
    /// norm of the isotropic noise added to a document's cluster centroid
    pub doc_noise: f64,
    pub query_noise: f64,
}

impl SynthConfig {
    pub fn new(docs: usize, queries: usize, dim: usize, homophily: f64, seed: u64) -> Self {
        Self {
            docs,
            queries,
            dim,
            homophily,
            seed,
            cluster_size: 10,
            doc_len: 30,
            topic_rate: 0.3,
            topic_words: 8,
            topic_share: 3,
            query_topic_words: 2,
            general_words: 400,
            doc_noise: 1.0,
            query_noise: 2.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.docs < 2 || self.queries == 0 || self.dim == 0 || self.cluster_size < 2 {
            return bad("need at least 2 docs, 1 query, dim ≥ 1 and cluster size ≥ 2");
        }
        if self.docs < self.cluster_size {
            return bad("fewer documents than one cluster");
        }
        if !(0.0..=1.0).contains(&self.homophily) || !(0.0..=1.0).contains(&self.topic_rate) {
            return bad("homophily and topic rate must lie in [0, 1]");
        }
        if self.doc_len == 0 || self.topic_words == 0 || self.general_words == 0 || self.topic_share == 0 {
            return bad("vocabulary sizes and document length must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub collection: Collection,
    pub queries: QuerySet,
    pub qrels: Qrels,
    /// document and query vectors in one store (ids do not collide)
    pub embeddings: EmbeddingStore,
    /// cluster of each document, in collection order
    pub doc_cluster: Vec<usize>,
    /// target cluster of each query, in query order
    pub query_cluster: Vec<usize>,
}

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng::standard_normal(rng)).collect();
    let n = norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

fn noisy_unit(center: &[f64], noise: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let scale = noise / libm::sqrt(center.len() as f64);
    let v: Vec<f64> = center.iter().map(|c| c + scale * rng::standard_normal(rng)).collect();
    let n = norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, rng::fnv1a(b"synth"));
    let n_clusters = config.docs / config.cluster_size;

    let mut doc_cluster: Vec<usize> = (0..config.docs).map(|i| i % n_clusters).collect();
    doc_cluster.shuffle(&mut rng);
    let centroids: Vec<Vec<f64>> = (0..n_clusters).map(|_| unit_gaussian(&mut rng, config.dim)).collect();
    let mut members: Vec<Vec<usize>> = alloc::vec![Vec::new(); n_clusters];
    for (d, &c) in doc_cluster.iter().enumerate() {
        members[c].push(d);
    }

    // each cluster draws distinct topic words from a pool sized so that a
    // word is shared by about `topic_share` clusters
    let pool_size = (n_clusters * config.topic_words / config.topic_share).max(config.topic_words);
    let mut pool_words: Vec<usize> = (0..pool_size).collect();
    let vocab: Vec<Vec<usize>> = (0..n_clusters)
        .map(|_| {
            let (chosen, _) = pool_words.partial_shuffle(&mut rng, config.topic_words);
            chosen.to_vec()
        })
        .collect();
    let topic_word = |c: usize, k: usize| alloc::format!("t{}", vocab[c][k]);
    let general_word = |k: usize| alloc::format!("g{k}");
    let mut store = EmbeddingStore::new(config.dim);
    let mut docs = Vec::with_capacity(config.docs);
    for (d, &c) in doc_cluster.iter().enumerate() {
        let words: Vec<String> = (0..config.doc_len)
            .map(|_| {
                if rng.random_bool(config.topic_rate) {
                    topic_word(c, rng.random_range(0..config.topic_words))
                } else {
                    general_word(rng.random_range(0..config.general_words))
                }
            })
            .collect();
        let id = alloc::format!("d{d:05}");
        store.insert_f64(&id, &noisy_unit(&centroids[c], config.doc_noise, &mut rng))?;
        docs.push((id, words.join(" ")));
    }

    let mut targets: Vec<usize> = (0..n_clusters).collect();
    targets.shuffle(&mut rng);
    let mut queries = Vec::with_capacity(config.queries);
    let mut query_cluster = Vec::with_capacity(config.queries);
    let mut qrels = Qrels::new();
    for q in 0..config.queries {
        // distinct targets while clusters last
        let t = targets[q % n_clusters];
        query_cluster.push(t);
        let id = alloc::format!("q{q:04}");
        let mut words: Vec<String> = Vec::new();
        let mut topic: Vec<usize> = (0..config.topic_words).collect();
        topic.shuffle(&mut rng);
        words.extend(topic.iter().take(config.query_topic_words).map(|&k| topic_word(t, k)));
        words.extend((0..2).map(|_| general_word(rng.random_range(0..config.general_words))));
        store.insert_f64(&id, &noisy_unit(&centroids[t], config.query_noise, &mut rng))?;

        let mut pool = members[t].clone();
        pool.shuffle(&mut rng);
        let mut chosen = BTreeSet::new();
        for _ in 0..config.cluster_size {
            let doc = if rng.random_bool(config.homophily) {
                pool.iter().copied().find(|d| !chosen.contains(d))
            } else {
                (0..64).map(|_| rng.random_range(0..config.docs)).find(|d| !chosen.contains(d))
            };
            if let Some(d) = doc {
                chosen.insert(d);
                qrels.insert(&id, &docs[d].0, rng.random_range(1..=3))?;
            }
        }
        queries.push((id, words.join(" ")));
    }
    store.set_normalized_flag(true);

    Ok(SynthCorpus {
        collection: Collection::from_pairs(docs)?,
        queries: QuerySet::from_pairs(queries)?,
        qrels,
        embeddings: store,
        doc_cluster,
        query_cluster,
    })
}

impl SynthCorpus {
    /// True when, for every query, each judged document shares its
    /// cluster with at least one other judged document of that query.
    pub fn judged_docs_cluster_together(&self) -> bool {
        self.queries.iter().all(|(q, _)| {
            let docs: Vec<usize> = self
                .qrels
                .for_query(q)
                .map(|m| m.keys().filter_map(|d| self.collection.index_of(d)).collect())
                .unwrap_or_default();
            docs.iter().all(|&a| docs.iter().any(|&b| b != a && self.doc_cluster[a] == self.doc_cluster[b]))
        })
    }

    /// Fraction of judged documents that lie in their query's target cluster.
    pub fn in_cluster_fraction(&self) -> f64 {
        let (mut inside, mut total) = (0usize, 0usize);
        for (qi, (q, _)) in self.queries.iter().enumerate() {
            if let Some(m) = self.qrels.for_query(q) {
                for d in m.keys() {
                    total += 1;
                    let di = self.collection.index_of(d).expect("judged doc in collection");
                    inside += usize::from(self.doc_cluster[di] == self.query_cluster[qi]);
                }
            }
        }
        if total == 0 {
            0.0
        } else {
            inside as f64 / total as f64
        }
    }
}
