use thiserror::Error;

/// Errors raised by the factorization, sketching and generator routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular triangular factor: zero diagonal entry at index {index}")]
    Singular { index: usize },
    #[error("numerical rank exhausted at step {step}: largest trailing column norm {gamma_max:e} is below 1e-300")]
    RankExhausted { step: usize, gamma_max: f64 },
    #[error("sketch size d = {d} cannot reveal rank k = {k}")]
    Sizing { d: usize, k: usize },
    #[error("interchange limit of {limit} swaps reached at k = {k} (rho = {rho})")]
    SwapLimit { limit: usize, k: usize, rho: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
