//! Random sketching operators `Ω ∈ ℝ^{d×m}`.
//!
//! * Gaussian: i.i.d. `N(0, 1/d)` entries. Column `c` of `Ω` is drawn from its
//!   own ChaCha stream, so any block of `Ω` can be regenerated on demand.
//! * SRHT: `Ω = √(m/d)·P·H·D` with `H` the orthonormal Hadamard matrix, `D`
//!   random signs and `P` uniform row sampling with replacement. Applied with
//!   a fast Walsh–Hadamard transform; `Ω` is never formed.
//! * Identity: `Ω = I` (`d = m`), a zero-distortion stand-in for tests.
//!
//! Signs, sample indices and Gaussian entries are re-derived from the seed;
//! only `{kind, d, m, seed}` is serialized.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::matrix::Matrix;
use crate::svd::singular_values;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchKind {
    Gaussian,
    Srht,
    Identity,
}

impl std::str::FromStr for SketchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(SketchKind::Gaussian),
            "srht" => Ok(SketchKind::Srht),
            "identity" => Ok(SketchKind::Identity),
            other => Err(Error::Parse(format!("unknown sketch kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for SketchKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SketchKind::Gaussian => "gaussian",
            SketchKind::Srht => "srht",
            SketchKind::Identity => "identity",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "OperatorRecord", into = "OperatorRecord")]
pub struct SketchOperator {
    kind: SketchKind,
    d: usize,
    m: usize,
    seed: u64,
    signs: Vec<f64>,
    samples: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct OperatorRecord {
    kind: SketchKind,
    d: usize,
    m: usize,
    seed: u64,
}

impl TryFrom<OperatorRecord> for SketchOperator {
    type Error = Error;

    fn try_from(r: OperatorRecord) -> Result<Self> {
        SketchOperator::new(r.kind, r.d, r.m, r.seed)
    }
}

impl From<SketchOperator> for OperatorRecord {
    fn from(op: SketchOperator) -> Self {
        OperatorRecord {
            kind: op.kind,
            d: op.d,
            m: op.m,
            seed: op.seed,
        }
    }
}

impl PartialEq for SketchOperator {
    fn eq(&self, other: &Self) -> bool {
        (self.kind, self.d, self.m, self.seed) == (other.kind, other.d, other.m, other.seed)
    }
}

// Gaussian entries are generated in column blocks of at most this many values.
const GAUSSIAN_BLOCK_ENTRIES: usize = 1 << 19;

impl SketchOperator {
    pub fn new(kind: SketchKind, d: usize, m: usize, seed: u64) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(domain(format!("sketch dimensions must be positive, got d = {d}, m = {m}")));
        }
        if d > m {
            return Err(Error::Sizing { d, k: m });
        }
        let (mut signs, mut samples) = (Vec::new(), Vec::new());
        match kind {
            SketchKind::Identity if d != m => {
                return Err(domain("identity sketch needs d = m"));
            }
            SketchKind::Srht => {
                if !m.is_power_of_two() {
                    return Err(domain(format!("SRHT needs a power-of-two row count, got {m}")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                signs = (0..m).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
                samples = (0..d).map(|_| rng.gen_range(0..m)).collect();
            }
            _ => {}
        }
        Ok(Self {
            kind,
            d,
            m,
            seed,
            signs,
            samples,
        })
    }

    pub fn kind(&self) -> SketchKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Rademacher signs (the `D` factor); empty unless SRHT.
    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    /// Sampled rows of `H·D` (the `P` factor); empty unless SRHT.
    pub fn samples(&self) -> &[usize] {
        &self.samples
    }

    /// Columns `c0..c1` of a Gaussian `Ω`.
    fn gaussian_columns(&self, c0: usize, c1: usize) -> Matrix {
        let scale = 1.0 / (self.d as f64).sqrt();
        let mut block = Matrix::zeros(self.d, c1 - c0);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for c in c0..c1 {
            rng.set_stream(c as u64);
            rng.set_word_pos(0);
            for x in block.col_mut(c - c0) {
                let z: f64 = rng.sample(StandardNormal);
                *x = z * scale;
            }
        }
        block
    }

    /// `Ω·X`.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.m {
            return Err(Error::Dimension(format!(
                "sketch expects {} rows, got {}",
                self.m,
                x.rows()
            )));
        }
        match self.kind {
            SketchKind::Identity => Ok(x.clone()),
            SketchKind::Gaussian => {
                let mut out = Matrix::zeros(self.d, x.cols());
                let width = (GAUSSIAN_BLOCK_ENTRIES / self.d).max(1);
                let mut c0 = 0;
                while c0 < self.m {
                    let c1 = (c0 + width).min(self.m);
                    let omega = self.gaussian_columns(c0, c1);
                    out.add_product(&omega, &x.block(c0, c1, 0, x.cols()))?;
                    c0 = c1;
                }
                Ok(out)
            }
            SketchKind::Srht => {
                let scale = 1.0 / (self.d as f64).sqrt();
                let mut out = Matrix::zeros(self.d, x.cols());
                let mut buf = vec![0.0; self.m];
                for j in 0..x.cols() {
                    for ((b, v), s) in buf.iter_mut().zip(x.col(j)).zip(&self.signs) {
                        *b = v * s;
                    }
                    fwht(&mut buf)?;
                    for (o, &idx) in out.col_mut(j).iter_mut().zip(&self.samples) {
                        *o = buf[idx] * scale;
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn apply_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply(&Matrix::column_vector(v))?.col(0).to_vec())
    }

    /// Dense `Ω` (`d × m`), for inspection at small sizes.
    pub fn to_dense(&self) -> Result<Matrix> {
        self.apply(&Matrix::identity(self.m))
    }
}

/// In-place unnormalized Walsh–Hadamard transform (Sylvester ordering).
pub fn fwht(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    if !n.is_power_of_two() {
        return Err(domain(format!("FWHT needs a power-of-two length, got {n}")));
    }
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            let (lo, hi) = v[start..start + 2 * h].split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    Ok(())
}

/// Zero-pads `M` below to the next power-of-two row count.
pub fn pad_to_pow2(m: &Matrix) -> Matrix {
    let rows = m.rows().next_power_of_two();
    if rows == m.rows() {
        m.clone()
    } else {
        m.pad_rows(rows)
    }
}

/// Measured distortion `ε̂ = max(1 − σ_min², σ_max² − 1)` of `Ω` on
/// `range(basis)`; 1 when `d` is smaller than the subspace dimension.
pub fn embedding_distortion(op: &SketchOperator, basis: &Matrix) -> Result<f64> {
    let gram = basis.t_matmul(basis)?;
    let dev = gram.sub(&Matrix::identity(basis.cols()))?.max_abs();
    if dev > 1e-10 {
        return Err(domain(format!(
            "basis columns are not orthonormal (|BᵀB − I| = {dev:.3e})"
        )));
    }
    if op.d() < basis.cols() {
        return Ok(1.0);
    }
    let sv = singular_values(&op.apply(basis)?);
    let (hi, lo) = (sv[0], sv[sv.len() - 1]);
    Ok((1.0 - lo * lo).max(hi * hi - 1.0).max(0.0))
}

/// Default sketch size `⌊3n·ln m / ln n⌋`, clamped to `[n + 1, m]`.
pub fn ose_dim(n: usize, m: usize) -> usize {
    let raw = 3.0 * n as f64 * (m as f64).ln() / (n as f64).ln();
    let d = if raw.is_finite() { raw.floor() as usize } else { m };
    d.max(n + 1).min(m)
}

/// Sketch size from the asymptotic OSE bounds with an explicit constant:
///
/// * Gaussian: `C·ε⁻²·(n − ln δ)`
/// * SRHT: `C·ε⁻²·(n + ln(m/δ))·ln(n/δ)`
///
/// clamped to `[n + 1, m]`. Identity returns `m`.
pub fn theoretical_dim(
    kind: SketchKind,
    cfg: &SketchConfig,
    m: usize,
    constant: f64,
) -> Result<usize> {
    cfg.validate()?;
    if !(constant > 0.0) {
        return Err(domain("sizing constant must be positive"));
    }
    let (eps, delta, n) = (cfg.epsilon, cfg.delta, cfg.subspace_dim as f64);
    let raw = match kind {
        SketchKind::Gaussian => constant * (n - delta.ln()) / (eps * eps),
        SketchKind::Srht => {
            constant * (n + (m as f64 / delta).ln()) * (n / delta).ln() / (eps * eps)
        }
        SketchKind::Identity => m as f64,
    };
    Ok((raw.ceil() as usize).max(cfg.subspace_dim + 1).min(m))
}

/// Embedding parameters `(ε, δ, n)` together with the chosen sketch size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SketchConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub subspace_dim: usize,
    pub d: usize,
}

impl SketchConfig {
    /// Configuration with `d` from [`ose_dim`].
    pub fn new(epsilon: f64, delta: f64, subspace_dim: usize, m: usize) -> Result<Self> {
        let cfg = Self {
            epsilon,
            delta,
            subspace_dim,
            d: ose_dim(subspace_dim, m),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(domain(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(domain(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.subspace_dim == 0 {
            return Err(domain("subspace dimension must be positive"));
        }
        Ok(())
    }
}
