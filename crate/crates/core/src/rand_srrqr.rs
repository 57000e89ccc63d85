//! Randomized strong RRQR: choose the permutation on a sketch `Ω·M`, then
//! factor `M·Π` without pivoting.
//!
//! Pivoting on the sketch certifies `ρ(R, k) ≤ f̃ = √((1+ε)/(1−ε))·f` for the
//! factorization of `M` whenever `Ω` is an ε-embedding of the relevant
//! subspace, so all strong-RRQR bounds hold with `f` replaced by `f̃`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{orthonormal_basis, solve_upper_matrix};
use crate::matrix::Matrix;
use crate::qr::{partial_qr_permuted, thin_r, PartialQR};
use crate::sketch::{embedding_distortion, ose_dim, pad_to_pow2, SketchKind, SketchOperator};
use crate::srrqr::{srrqr, SrrqrConfig, SrrqrResult};
use crate::svd::singular_values;

/// Column count up to which `ε̂` is measured against a basis of `range(M)`.
pub const MEASURE_MAX_COLS: usize = 64;

/// Trailing ratios whose denominator `σ_{j+k}(M)` falls below this fraction
/// of `σ₁(M)` are reported as undefined.
pub const UNDEFINED_RTOL: f64 = 1e-13;

/// Which subspace the default sketch size is meant to embed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizingPolicy {
    /// All of `range(M)` (`n`-dimensional).
    #[default]
    RangeEmbedding,
    /// Any `(k+1)`-dimensional subspace; tolerance mode falls back to `n`.
    OseKPlus1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandSrrqrConfig {
    pub f: f64,
    pub kind: SketchKind,
    /// Sketch rows; `None` picks [`ose_dim`] for the sizing policy.
    pub d: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub sizing: SizingPolicy,
    /// Distortion assumed when `ε̂` is too expensive to measure.
    pub nominal_epsilon: f64,
}

impl RandSrrqrConfig {
    pub fn new(f: f64, kind: SketchKind, seed: u64) -> Self {
        Self {
            f,
            kind,
            d: None,
            seed,
            sizing: SizingPolicy::RangeEmbedding,
            nominal_epsilon: 0.5,
        }
    }

    pub fn with_d(mut self, d: usize) -> Self {
        self.d = Some(d);
        self
    }

    pub fn with_sizing(mut self, sizing: SizingPolicy) -> Self {
        self.sizing = sizing;
        self
    }

    fn sketch_rows(&self, padded_m: usize, n: usize, k: Option<usize>) -> usize {
        if self.kind == SketchKind::Identity {
            return padded_m;
        }
        self.d.unwrap_or_else(|| {
            let dim = match (self.sizing, k) {
                (SizingPolicy::OseKPlus1, Some(k)) => k + 1,
                _ => n,
            };
            ose_dim(dim, padded_m)
        })
    }
}

/// Wall-clock milliseconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub sketch: f64,
    pub select: f64,
    pub factor: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct RandSrrqrResult {
    /// Unpivoted partial QR of `M·Π`.
    pub factorization: PartialQR,
    pub k: usize,
    /// Strong RRQR of the sketch; its permutation is the one applied to `M`.
    pub sketch_result: SrrqrResult,
    pub sketch: Matrix,
    pub f: f64,
    pub f_tilde: f64,
    /// `ε̂` when measured, otherwise the nominal ε.
    pub distortion: f64,
    pub distortion_measured: bool,
    pub seed: u64,
    pub kind: SketchKind,
    pub d: usize,
    pub timings: Timings,
}

/// `√((1+ε)/(1−ε))·f`, infinite for `ε ≥ 1`.
pub fn inflated_f(f: f64, epsilon: f64) -> f64 {
    if epsilon >= 1.0 {
        f64::INFINITY
    } else {
        ((1.0 + epsilon) / (1.0 - epsilon)).sqrt() * f
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn run(m: &Matrix, cfg: &RandSrrqrConfig, sk_cfg: SrrqrConfig, k_hint: Option<usize>) -> Result<RandSrrqrResult> {
    let start = Instant::now();
    let padded = if cfg.kind == SketchKind::Srht { pad_to_pow2(m) } else { m.clone() };
    let d = cfg.sketch_rows(padded.rows(), m.cols(), k_hint);
    if d > padded.rows() {
        return Err(Error::Sizing { d, k: padded.rows() });
    }
    if let Some(k) = k_hint {
        if d < k {
            return Err(Error::Sizing { d, k });
        }
    }
    let op = SketchOperator::new(cfg.kind, d, padded.rows(), cfg.seed)?;
    let sketch = op.apply(&padded)?;
    let t_sketch = ms(start);

    let t = Instant::now();
    let sketch_result = srrqr(&sketch, &sk_cfg)?;
    let t_select = ms(t);

    let t = Instant::now();
    let k = sketch_result.k;
    let factorization = partial_qr_permuted(m, &sketch_result.factorization.perm, k)?;
    let t_factor = ms(t);
    let total = ms(start);

    let (distortion, distortion_measured) = if m.cols() <= MEASURE_MAX_COLS && m.frobenius_norm() > 0.0 {
        (embedding_distortion(&op, &orthonormal_basis(&padded)?)?, true)
    } else {
        (cfg.nominal_epsilon, false)
    };
    Ok(RandSrrqrResult {
        factorization,
        k,
        sketch_result,
        sketch,
        f: cfg.f,
        f_tilde: inflated_f(cfg.f, distortion),
        distortion,
        distortion_measured,
        seed: cfg.seed,
        kind: cfg.kind,
        d,
        timings: Timings {
            sketch: t_sketch,
            select: t_select,
            factor: t_factor,
            total,
        },
    })
}

/// Randomized strong RRQR selecting exactly `k` columns.
pub fn rand_srrqr_rank(m: &Matrix, k: usize, cfg: &RandSrrqrConfig) -> Result<RandSrrqrResult> {
    run(m, cfg, SrrqrConfig::rank(cfg.f, k)?, Some(k))
}

/// Randomized strong RRQR whose rank is set by `max γ_j(R₂₂^sk) < τ` on the
/// sketch.
pub fn rand_srrqr_tol(m: &Matrix, tau: f64, cfg: &RandSrrqrConfig) -> Result<RandSrrqrResult> {
    if tau < 1e-300 * m.frobenius_norm() {
        return Err(domain(format!("tolerance {tau:e} is below 1e-300·‖M‖_F")));
    }
    run(m, cfg, SrrqrConfig::tolerance(cfg.f, tau)?, None)
}

/// Singular-value ratios of a `k`-partial factorization against `σ(M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    /// `σ_i(M)/σ_i(R₁₁)`, `i < k`.
    pub leading_ratios: Vec<f64>,
    /// `σ_j(R₂₂)/σ_{j+k}(M)`, `j < min(m,n) − k`; `None` where undefined.
    pub trailing_ratios: Vec<Option<f64>>,
    /// `max |R₁₁⁻¹R₁₂|`.
    pub a_max: f64,
    /// `√(1 + f²k(n−k))` with the `f` passed in.
    pub bound: f64,
}

impl RatioReport {
    pub fn max_ratio(&self) -> f64 {
        self.leading_ratios
            .iter()
            .copied()
            .chain(self.trailing_ratios.iter().flatten().copied())
            .fold(0.0, f64::max)
    }

    pub fn min_ratio(&self) -> f64 {
        self.leading_ratios
            .iter()
            .copied()
            .chain(self.trailing_ratios.iter().flatten().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn ratio_bound(f: f64, k: usize, n: usize) -> f64 {
    (1.0 + f * f * (k * (n - k)) as f64).sqrt()
}

/// Ratios for any `k`-partial factorization given `σ(M)` (descending).
pub fn ratio_report_with_spectrum(fact: &PartialQR, sigma: &[f64], f: f64) -> Result<RatioReport> {
    let k = fact.k;
    let n = fact.cols();
    if sigma.len() != fact.rows().min(n) {
        return Err(Error::Dimension(format!(
            "spectrum of length {} for a {}x{} matrix",
            sigma.len(),
            fact.rows(),
            n
        )));
    }
    let s11 = singular_values(&fact.r11);
    let leading_ratios = (0..k).map(|i| sigma[i] / s11[i]).collect();
    let s22 = singular_values(&fact.r22);
    let floor = UNDEFINED_RTOL * sigma.first().copied().unwrap_or(0.0);
    let trailing_ratios = (0..sigma.len() - k)
        .map(|j| {
            let denom = sigma[j + k];
            (denom > floor).then(|| s22[j] / denom)
        })
        .collect();
    let a_max = if k > 0 && k < n {
        solve_upper_matrix(&fact.r11, &fact.r12)?.max_abs()
    } else {
        0.0
    };
    Ok(RatioReport {
        leading_ratios,
        trailing_ratios,
        a_max,
        bound: ratio_bound(f, k, n),
    })
}

/// [`ratio_report_with_spectrum`] for a randomized result, bounded with `f̃`.
pub fn ratio_report(m: &Matrix, res: &RandSrrqrResult) -> Result<RatioReport> {
    ratio_report_with_spectrum(&res.factorization, &singular_values(m), res.f_tilde)
}

/// Diagonals of the QLP `L` factor and of `R₁₁`, both as singular-value
/// estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QlpResult {
    /// `|diag L|` in factorization order.
    pub l_values: Vec<f64>,
    /// `l_values` sorted descending.
    pub l_sorted: Vec<f64>,
    /// `|diag R₁₁|`.
    pub r_values: Vec<f64>,
}

/// QR without pivoting of `[R₁₁ R₁₂]ᵀ`; its triangular factor is `Lᵀ`.
pub fn qlp_values(fact: &PartialQR) -> Result<QlpResult> {
    if fact.k == 0 {
        return Err(domain("QLP needs k >= 1"));
    }
    let top = fact.r_top();
    let l_values: Vec<f64> = thin_r(&top.transpose()).diagonal().iter().map(|x| x.abs()).collect();
    let mut l_sorted = l_values.clone();
    l_sorted.sort_by(|a, b| b.total_cmp(a));
    let r_values = fact.r11.diagonal().iter().map(|x| x.abs()).collect();
    Ok(QlpResult {
        l_values,
        l_sorted,
        r_values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub leading: Vec<f64>,
    pub trailing: Vec<Option<f64>>,
}

/// One exported run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub k: usize,
    pub seed: u64,
    pub kind: SketchKind,
    pub d: usize,
    pub f: f64,
    /// `None` when only the nominal ε was available.
    pub epsilon_measured: Option<f64>,
    pub ratios: Ratios,
    pub bound: f64,
    pub l_values: Vec<f64>,
    pub r_values: Vec<f64>,
    pub swap_count: usize,
    pub timings_ms: Timings,
}

impl RunRecord {
    pub fn new(res: &RandSrrqrResult, report: &RatioReport, qlp: &QlpResult) -> Self {
        Self {
            k: res.k,
            seed: res.seed,
            kind: res.kind,
            d: res.d,
            f: res.f,
            epsilon_measured: res.distortion_measured.then_some(res.distortion),
            ratios: Ratios {
                leading: report.leading_ratios.clone(),
                trailing: report.trailing_ratios.clone(),
            },
            bound: report.bound,
            l_values: qlp.l_values.clone(),
            r_values: qlp.r_values.clone(),
            swap_count: res.sketch_result.swap_count,
            timings_ms: res.timings,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inflation() {
        assert_eq!(inflated_f(2.0, 0.0), 2.0);
        assert!((inflated_f(2.0, 0.6) - 4.0).abs() < 1e-15);
        assert!(inflated_f(2.0, 1.0).is_infinite());
    }

    #[test]
    fn identity_sketch_reproduces_deterministic_selection() {
        let m = Matrix::from_diagonal(&[1.0, 2.0, 3.0]).pad_rows(8);
        let cfg = RandSrrqrConfig::new(2.0, SketchKind::Identity, 0);
        let res = rand_srrqr_rank(&m, 2, &cfg).unwrap();
        let mut sel = res.factorization.selected_columns().to_vec();
        sel.sort();
        assert_eq!(sel, vec![1, 2]);
        assert_eq!(res.distortion, 0.0);
        assert!(res.distortion_measured);
        assert_eq!(res.f_tilde, 2.0);
        let report = ratio_report(&m, &res).unwrap();
        assert!(report.leading_ratios.iter().all(|r| (r - 1.0).abs() < 1e-14));
        assert_eq!(report.trailing_ratios.len(), 1);
    }

    #[test]
    fn sizing_errors() {
        let m = Matrix::from_diagonal(&[1.0, 2.0, 3.0]).pad_rows(8);
        let cfg = RandSrrqrConfig::new(2.0, SketchKind::Gaussian, 0).with_d(1);
        assert!(matches!(rand_srrqr_rank(&m, 2, &cfg), Err(Error::Sizing { .. })));
        let cfg = RandSrrqrConfig::new(2.0, SketchKind::Gaussian, 0).with_d(9);
        assert!(rand_srrqr_rank(&m, 2, &cfg).is_err());
        let cfg = RandSrrqrConfig::new(2.0, SketchKind::Gaussian, 0);
        assert!(rand_srrqr_tol(&m, 0.0, &cfg).is_err());
    }

    #[test]
    fn tolerance_cut() {
        let m = Matrix::from_diagonal(&[3.0, 2.0, 1e-12]).pad_rows(8);
        let cfg = RandSrrqrConfig::new(2.0, SketchKind::Srht, 5).with_d(8);
        let res = rand_srrqr_tol(&m, 1e-6, &cfg).unwrap();
        assert_eq!(res.k, 2);
        let report = ratio_report(&m, &res).unwrap();
        assert!((report.trailing_ratios[0].unwrap() - 1.0).abs() < 1e-3);
        let m = Matrix::from_diagonal(&[3.0, 2.0, 1e-14]).pad_rows(8);
        let res = rand_srrqr_tol(&m, 1e-6, &cfg).unwrap();
        assert_eq!(ratio_report(&m, &res).unwrap().trailing_ratios, vec![None]);
    }

    #[test]
    fn qlp_of_diagonal_and_rank_one() {
        let m = Matrix::from_diagonal(&[1.0, 4.0, 2.0]);
        let fact = crate::qr::qrcp(&m, 3).unwrap();
        let q = qlp_values(&fact).unwrap();
        assert_eq!(q.r_values, vec![4.0, 2.0, 1.0]);
        assert_eq!(q.l_sorted, vec![4.0, 2.0, 1.0]);
        let u = [0.6, 0.8, 0.0];
        let v = [0.0, 1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        let m = Matrix::from_fn(3, 3, |i, j| u[i] * v[j]);
        let q = qlp_values(&crate::qr::qrcp(&m, 2).unwrap()).unwrap();
        assert!((q.l_values[0] - 1.0).abs() < 1e-14);
        assert!(q.l_values[1] < 1e-12);
    }
}
