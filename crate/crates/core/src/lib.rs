//! Graph neural re-ranking over query-induced corpus subgraphs.
//!
//! The crate is `no_std` (with `alloc`) and performs no IO. Every file
//! format is exposed as an encoder to bytes or text and a decoder from a
//! byte slice or string; the `gnrr` companion crate does the file handling
//! and the command-line driver.
//!
//! Pipeline, in module order:
//!
//! 1. [`corpus`]: collections, queries, graded judgments, TREC run files.
//! 2. [`lexical`]: BM25 first-stage retrieval over an inverted index.
//! 3. [`embeddings`]: dense encodings (imported or pseudo-encoded).
//! 4. [`graph`]: the c-nearest-neighbour corpus graph and its restriction
//!    to a query's candidates.
//! 5. [`features`]: query ⊙ document node features, plus the rank column.
//! 6. [`gnn`]: message-passing branch, individual branch, scorer, with
//!    hand-written backward passes.
//! 7. [`training`]: LambdaRank gradients, Adam, early stopping.
//! 8. [`metrics`] and [`ablation`]: evaluation and GNN-branch corruption.
#![no_std]

extern crate alloc;

pub mod ablation;
mod codec;
pub mod corpus;
pub mod embeddings;
mod error;
pub mod features;
pub mod gnn;
pub mod gradcheck;
pub mod graph;
pub mod lexical;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod synth;
pub mod training;

pub use error::{Error, Result};
