//! Monte Carlo harness, file formats and command-line front end for the
//! `nfbf-core` beamforming library.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiment;
pub mod harness;
pub mod io;
pub mod pattern;
pub mod selftest;

pub use experiment::{ExperimentKind, ExperimentSpec};
pub use harness::{run_experiment, ResultRow, ResultTable};
pub use pattern::{run_beam_pattern, PatternResult, PatternSpec};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] nfbf_core::Error),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
