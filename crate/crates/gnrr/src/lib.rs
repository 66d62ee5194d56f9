//! File formats, pipeline orchestration and the `gnrr` command line over
//! [`gnrr_core`].

pub mod cli;
pub mod io;
pub mod parallel;
pub mod pipeline;

pub use gnrr_core as core;
