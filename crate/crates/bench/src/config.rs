use serde::{Deserialize, Serialize};

use rrqr_core::rand_srrqr::SizingPolicy;
use rrqr_core::{MatrixSpec, SketchKind};

use crate::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Srrqr,
    #[value(name = "rand-rank")]
    #[serde(rename = "rand-rank")]
    RandSrrqrRank,
    #[value(name = "rand-tau")]
    #[serde(rename = "rand-tau")]
    RandSrrqrTol,
    Qrcp,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Srrqr => "srrqr",
            Algo::RandSrrqrRank => "rand-rank",
            Algo::RandSrrqrTol => "rand-tau",
            Algo::Qrcp => "qrcp",
        }
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, Algo::RandSrrqrRank | Algo::RandSrrqrTol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Rank(usize),
    Tolerance(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub matrix: MatrixSpec,
    pub algo: Algo,
    pub f: f64,
    pub target: Target,
    pub sketch: SketchKind,
    /// Sketch rows; `None` applies `sizing`.
    pub d: Option<usize>,
    #[serde(default)]
    pub sizing: SizingPolicy,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output: Option<std::path::PathBuf>,
}

impl RunConfig {
    pub fn new(matrix: MatrixSpec, algo: Algo, target: Target) -> Self {
        Self {
            matrix,
            algo,
            f: 2.0,
            target,
            sketch: SketchKind::Srht,
            d: None,
            sizing: SizingPolicy::default(),
            seeds: vec![0],
            output: None,
        }
    }

    pub fn with_f(mut self, f: f64) -> Self {
        self.f = f;
        self
    }

    pub fn with_sketch(mut self, kind: SketchKind, d: Option<usize>) -> Self {
        self.sketch = kind;
        self.d = d;
        self
    }

    pub fn with_seeds(mut self, seeds: impl IntoIterator<Item = u64>) -> Self {
        self.seeds = seeds.into_iter().collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.matrix.validate()?;
        if !(self.f > 1.0) {
            return Err(BenchError::Config(format!("f must exceed 1, got {}", self.f)));
        }
        match self.target {
            Target::Rank(0) => return Err(BenchError::Config("k must be positive".into())),
            Target::Rank(k) if k > self.matrix.shape().1 => {
                return Err(BenchError::Config(format!("k = {k} exceeds the column count")))
            }
            Target::Rank(_) if self.algo == Algo::RandSrrqrTol => {
                return Err(BenchError::Config("rand-tau needs --tau, not --k".into()))
            }
            Target::Tolerance(_) if self.algo == Algo::RandSrrqrRank => {
                return Err(BenchError::Config("rand-rank needs --k, not --tau".into()))
            }
            Target::Tolerance(t) if !(t > 0.0) => {
                return Err(BenchError::Config(format!("tau must be positive, got {t}")))
            }
            _ => {}
        }
        if self.seeds.is_empty() {
            return Err(BenchError::Config("no seeds".into()));
        }
        Ok(())
    }
}

/// `"a:b:step"` (inclusive) or a single value.
pub fn parse_range(s: &str) -> Result<Vec<usize>> {
    let bad = || BenchError::Config(format!("bad range {s:?}, expected start:end:step"));
    let parts: Vec<usize> = s
        .split(':')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match parts[..] {
        [n] => Ok(vec![n]),
        [a, b] => Ok((a..=b).collect()),
        [a, b, step] if step > 0 => Ok((a..=b).step_by(step).collect()),
        _ => Err(bad()),
    }
}
