//! Experiment harness around `rrqr-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod run;
pub mod verify;
pub mod volume;

pub use config::{Algo, RunConfig, Target};
pub use run::{run, run_seed, Experiment, Record};
pub use verify::{verify, Check, Report};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] rrqr_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, BenchError>;

/// Worker pool sized by `SPECTRA_RRQR_THREADS` when set.
pub fn pool() -> rayon::ThreadPool {
    let threads = std::env::var("SPECTRA_RRQR_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}
