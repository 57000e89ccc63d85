//! Strong rank-revealing QR.
//!
//! The factorization grows `R₁₁` one greedy pivot at a time and, after each
//! step, swaps a leading column with a trailing one while some swap would
//! multiply `|det(R₁₁)|` by more than `f`. Swap gains are read off three
//! maintained quantities:
//!
//! * `ω_i` is the ℓ₂ norm of row `i` of `R₁₁⁻¹`,
//! * `γ_j` is the ℓ₂ norm of column `j` of `R₂₂`,
//! * `A = R₁₁⁻¹·R₁₂`,
//!
//! through `|det R̄₁₁ / det R₁₁| = √(A_ij² + ω_i²·γ_j²)`.
//!
//! All three are carried across pivot steps and swaps by rank-one update
//! formulas ([`UpdateStrategy::Incremental`]); [`UpdateStrategy::Recompute`]
//! rebuilds them from the working factor after every change and exists to
//! cross-check the updates.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{column_norms, inverse_row_norm, inverse_row_norms, solve_upper, solve_upper_matrix};
use crate::matrix::{norm2, Matrix};
use crate::perm::PermutationSeq;
use crate::qr::{apply_reflector, argmax_with_ties, make_reflector, partial_qr_permuted, PartialQR};

pub use crate::qr::qrcp;

/// Trailing column norms below this are treated as exact zeros when a target
/// rank is requested.
pub const GAMMA_FLOOR: f64 = 1e-300;

/// When to stop growing `R₁₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Select exactly `k` columns.
    TargetRank(usize),
    /// Stop once every trailing column norm is below `tau`.
    Tolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateStrategy {
    #[default]
    Incremental,
    Recompute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrrqrConfig {
    /// Interchange threshold, `f > 1`.
    pub f: f64,
    pub mode: StopRule,
    #[serde(default)]
    pub updates: UpdateStrategy,
}

impl SrrqrConfig {
    pub fn rank(f: f64, k: usize) -> Result<Self> {
        let cfg = Self {
            f,
            mode: StopRule::TargetRank(k),
            updates: UpdateStrategy::Incremental,
        };
        cfg.validate().map(|_| cfg)
    }

    pub fn tolerance(f: f64, tau: f64) -> Result<Self> {
        let cfg = Self {
            f,
            mode: StopRule::Tolerance(tau),
            updates: UpdateStrategy::Incremental,
        };
        cfg.validate().map(|_| cfg)
    }

    pub fn with_updates(mut self, updates: UpdateStrategy) -> Self {
        self.updates = updates;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f > 1.0) || !self.f.is_finite() {
            return Err(domain(format!("f must be a finite value > 1, got {}", self.f)));
        }
        match self.mode {
            StopRule::TargetRank(0) => Err(domain("target rank must be at least 1")),
            StopRule::Tolerance(tau) if !(tau > 0.0) || !tau.is_finite() => {
                Err(domain(format!("tolerance must be positive and finite, got {tau}")))
            }
            _ => Ok(()),
        }
    }
}

/// Working factor of the strong RRQR iteration plus its maintained
/// quantities. Indices `i` (leading) and `j` (trailing) are zero-based;
/// trailing index `j` refers to global column `k + j`.
#[derive(Debug, Clone)]
pub struct SrrqrState {
    r: Matrix,
    perm: PermutationSeq,
    k: usize,
    omega: Vec<f64>,
    gamma: Vec<f64>,
    // γ at its last exact evaluation; drives the downdate safeguard
    gamma_ref: Vec<f64>,
    a: Matrix,
    swap_count: usize,
    updates: UpdateStrategy,
}

impl SrrqrState {
    /// State with `k = 0` for `M`.
    pub fn new(m: &Matrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(domain("matrix has non-finite entries"));
        }
        let gamma = column_norms(m);
        Ok(Self {
            r: m.clone(),
            perm: PermutationSeq::identity(m.cols()),
            k: 0,
            omega: Vec::new(),
            gamma_ref: gamma.clone(),
            gamma,
            a: Matrix::zeros(0, m.cols()),
            swap_count: 0,
            updates: UpdateStrategy::Incremental,
        })
    }

    /// State whose leading block holds the first `k` columns of `M·Π`,
    /// factored without further pivoting.
    pub fn with_leading(m: &Matrix, perm: &PermutationSeq, k: usize) -> Result<Self> {
        if perm.len() != m.cols() {
            return Err(domain("permutation size does not match column count"));
        }
        if k > m.rows().min(m.cols()) {
            return Err(domain(format!("k = {k} exceeds min(rows, cols)")));
        }
        let mut st = Self::new(&m.permute_columns(perm))?;
        st.perm = perm.clone();
        st.updates = UpdateStrategy::Recompute;
        for _ in 0..k {
            st.advance(0)?;
        }
        st.updates = UpdateStrategy::Incremental;
        Ok(st)
    }

    pub fn set_updates(&mut self, updates: UpdateStrategy) {
        self.updates = updates;
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> usize {
        self.r.rows()
    }

    pub fn cols(&self) -> usize {
        self.r.cols()
    }

    pub fn perm(&self) -> &PermutationSeq {
        &self.perm
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// `R₁₁⁻¹·R₁₂` as maintained (`k × (n−k)`).
    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn swap_count(&self) -> usize {
        self.swap_count
    }

    /// Working factor; its leading `k` columns are upper triangular.
    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn r11(&self) -> Matrix {
        self.r.block(0, self.k, 0, self.k)
    }

    pub fn r12(&self) -> Matrix {
        self.r.block(0, self.k, self.k, self.cols())
    }

    pub fn r22(&self) -> Matrix {
        self.r.block(self.k, self.rows(), self.k, self.cols())
    }

    pub fn gamma_max(&self) -> f64 {
        self.gamma.iter().copied().fold(0.0, f64::max)
    }

    /// `ln |det R₁₁|`.
    pub fn log_abs_det_r11(&self) -> f64 {
        (0..self.k).map(|i| self.r[(i, i)].abs().ln()).sum()
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        let t = self.cols() - self.k;
        if i >= self.k || j >= t {
            return Err(domain(format!(
                "pair ({i}, {j}) outside 0..{} x 0..{t}",
                self.k
            )));
        }
        Ok(())
    }

    /// `|det R̄₁₁ / det R₁₁|` for swapping leading column `i` with trailing
    /// column `j`.
    pub fn det_ratio(&self, i: usize, j: usize) -> Result<f64> {
        self.check_pair(i, j)?;
        Ok(self.ratio_unchecked(i, j))
    }

    #[inline]
    fn ratio_unchecked(&self, i: usize, j: usize) -> f64 {
        self.a[(i, j)].hypot(self.omega[i] * self.gamma[j])
    }

    /// `ρ(R, k)`: the largest swap gain; 0 when either block is empty.
    pub fn rho(&self) -> f64 {
        let t = self.cols() - self.k;
        let mut best: f64 = 0.0;
        for j in 0..t {
            for i in 0..self.k {
                best = best.max(self.ratio_unchecked(i, j));
            }
        }
        best
    }

    /// `ρ̂(R, k) = max(max|A_ij|, max ω_i·γ_j)`, with `ρ̂ ≤ ρ ≤ √2·ρ̂`.
    pub fn rho_hat(&self) -> f64 {
        if self.k == 0 || self.k == self.cols() {
            return 0.0;
        }
        let omega_max = self.omega.iter().copied().fold(0.0, f64::max);
        self.a.max_abs().max(omega_max * self.gamma_max())
    }

    /// First pair in row-major order whose swap gain exceeds `f`.
    pub fn find_interchange(&self, f: f64) -> Option<(usize, usize, f64)> {
        let t = self.cols() - self.k;
        for i in 0..self.k {
            for j in 0..t {
                let ratio = self.ratio_unchecked(i, j);
                if ratio > f {
                    return Some((i, j, ratio));
                }
            }
        }
        None
    }

    /// Moves trailing column `j` to position `k`, triangularizes it and grows
    /// `R₁₁` by one.
    pub fn advance(&mut self, j: usize) -> Result<()> {
        let (m, n, k) = (self.rows(), self.cols(), self.k);
        if k >= m.min(n) || j >= n - k {
            return Err(domain(format!(
                "cannot advance trailing column {j} at k = {k} for a {m}x{n} factor"
            )));
        }
        self.swap_trailing(0, j);
        let tau = make_reflector(&mut self.r.col_mut(k)[k..]);
        for c in k + 1..n {
            let (v, col) = self.r.two_cols_mut(k, c);
            apply_reflector(&v[k + 1..], tau, &mut col[k..]);
        }
        self.r.col_mut(k)[k + 1..].iter_mut().for_each(|x| *x = 0.0);
        let g = self.r[(k, k)];
        if g == 0.0 {
            return Err(Error::Singular { index: k });
        }
        self.k += 1;
        match self.updates {
            UpdateStrategy::Recompute => self.recompute(),
            UpdateStrategy::Incremental => {
                self.grow_maintained(g);
                Ok(())
            }
        }
    }

    /// Rank-one update of ω, γ, A after the pivot with diagonal `g` entered
    /// `R₁₁` (`self.k` already incremented).
    fn grow_maintained(&mut self, g: f64) {
        let k = self.k - 1;
        let n = self.cols();
        let t = n - k - 1;
        let u: Vec<f64> = self.a.col(0).to_vec();
        let c1: Vec<f64> = (k + 1..n).map(|c| self.r[(k, c)]).collect();
        for (w, ui) in self.omega.iter_mut().zip(&u) {
            *w = w.hypot(ui / g);
        }
        self.omega.push(1.0 / g.abs());
        let mut a = Matrix::zeros(k + 1, t);
        for jj in 0..t {
            let scale = c1[jj] / g;
            let src = self.a.col(jj + 1);
            let dst = a.col_mut(jj);
            for i in 0..k {
                dst[i] = src[i] - u[i] * scale;
            }
            dst[k] = scale;
        }
        self.a = a;
        self.gamma.remove(0);
        self.gamma_ref.remove(0);
        for jj in 0..t {
            let sq = self.gamma[jj] * self.gamma[jj] - c1[jj] * c1[jj];
            let updated = sq.max(0.0).sqrt();
            if updated < 0.5 * self.gamma_ref[jj] {
                let exact = norm2(&self.r.col(k + 1 + jj)[k + 1..]);
                self.gamma[jj] = exact;
                self.gamma_ref[jj] = exact;
            } else {
                self.gamma[jj] = updated;
            }
        }
    }

    /// Shrinks `R₁₁` by one, moving its last column to trailing position 0.
    fn shrink_maintained(&mut self) -> Result<()> {
        let k = self.k - 1;
        let n = self.cols();
        let g = self.r[(k, k)];
        let r11 = self.r.block(0, k, 0, k);
        let b: Vec<f64> = self.r.col(k)[..k].to_vec();
        let u = solve_upper(&r11, &b)?;
        for i in 0..k {
            let sq = self.omega[i] * self.omega[i] - (u[i] / g) * (u[i] / g);
            if sq < 0.25 * self.omega[i] * self.omega[i] {
                self.omega[i] = inverse_row_norm(&r11, i)?;
            } else {
                self.omega[i] = sq.sqrt();
            }
        }
        self.omega.truncate(k);
        let t_old = n - k - 1;
        let mut a = Matrix::zeros(k, t_old + 1);
        a.col_mut(0).copy_from_slice(&u);
        for jj in 0..t_old {
            let last = self.a[(k, jj)];
            let src = self.a.col(jj);
            let dst = a.col_mut(jj + 1);
            for i in 0..k {
                dst[i] = src[i] + u[i] * last;
            }
        }
        self.a = a;
        for jj in 0..t_old {
            let c = self.r[(k, k + 1 + jj)];
            self.gamma[jj] = self.gamma[jj].hypot(c);
            self.gamma_ref[jj] = self.gamma_ref[jj].max(self.gamma[jj]);
        }
        self.gamma.insert(0, g.abs());
        self.gamma_ref.insert(0, g.abs());
        self.k = k;
        Ok(())
    }

    /// Swaps trailing positions `j1` and `j2` (global `k+j1`, `k+j2`).
    fn swap_trailing(&mut self, j1: usize, j2: usize) {
        if j1 == j2 {
            return;
        }
        let k = self.k;
        self.r.swap_cols(k + j1, k + j2);
        self.perm.swap(k + j1, k + j2);
        self.gamma.swap(j1, j2);
        self.gamma_ref.swap(j1, j2);
        self.a.swap_cols(j1, j2);
    }

    /// Interchanges leading column `i` with trailing column `j` and restores
    /// the `k`-partial triangular form.
    pub fn interchange(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_pair(i, j)?;
        if self.k == self.rows() {
            return self.interchange_by_refactoring(i, j);
        }
        let k = self.k;
        let n = self.cols();
        let updates = self.updates;
        // grow with column j at position k, then swap it into slot i
        self.advance(j)?;
        self.r.swap_cols(i, k);
        self.perm.swap(i, k);
        self.omega.swap(i, k);
        for c in 0..self.a.cols() {
            let col = self.a.col_mut(c);
            col.swap(i, k);
        }
        // column i is now a spike over rows 0..=k; clear it from the bottom
        for p in (i + 1..=k).rev() {
            self.rotate_rows(p - 1, p, i, i);
        }
        // the sweep left subdiagonal entries in columns i+1..k-1
        for p in i + 1..k {
            self.rotate_rows(p, p + 1, p, p);
        }
        match updates {
            UpdateStrategy::Incremental => self.shrink_maintained()?,
            UpdateStrategy::Recompute => {
                self.k = k;
                self.recompute()?;
            }
        }
        self.swap_trailing(0, j);
        self.swap_count += 1;
        debug_assert_eq!(self.a.shape(), (k, n - k));
        Ok(())
    }

    /// Givens rotation on rows `(p, q)` that zeroes `r[q, col]`, applied to
    /// columns `first..n`.
    fn rotate_rows(&mut self, p: usize, q: usize, col: usize, first: usize) {
        let x = self.r[(p, col)];
        let y = self.r[(q, col)];
        if y == 0.0 {
            return;
        }
        let h = x.hypot(y);
        let (c, s) = (x / h, y / h);
        for cc in first..self.cols() {
            let (u, v) = (self.r[(p, cc)], self.r[(q, cc)]);
            self.r[(p, cc)] = c * u + s * v;
            self.r[(q, cc)] = -s * u + c * v;
        }
        self.r[(q, col)] = 0.0;
    }

    /// Swap path for a leading block that already uses every row.
    fn interchange_by_refactoring(&mut self, i: usize, j: usize) -> Result<()> {
        let (k, n) = (self.k, self.cols());
        self.r.swap_cols(i, k + j);
        self.perm.swap(i, k + j);
        for p in i..k {
            let tau = make_reflector(&mut self.r.col_mut(p)[p..]);
            for c in p + 1..n {
                let (v, col) = self.r.two_cols_mut(p, c);
                apply_reflector(&v[p + 1..], tau, &mut col[p..]);
            }
            self.r.col_mut(p)[p + 1..].iter_mut().for_each(|x| *x = 0.0);
        }
        self.recompute()?;
        self.swap_count += 1;
        Ok(())
    }

    /// Copy of the state after [`SrrqrState::interchange`].
    pub fn interchanged(&self, i: usize, j: usize) -> Result<Self> {
        let mut next = self.clone();
        next.interchange(i, j)?;
        Ok(next)
    }

    /// Rebuilds ω, γ and `A` from the working factor.
    pub fn recompute(&mut self) -> Result<()> {
        let (m, n, k) = (self.rows(), self.cols(), self.k);
        let r11 = self.r.block(0, k, 0, k);
        self.omega = if k > 0 { inverse_row_norms(&r11)? } else { Vec::new() };
        self.gamma = column_norms(&self.r.block(k, m, k, n));
        self.gamma_ref = self.gamma.clone();
        self.a = if k > 0 {
            solve_upper_matrix(&r11, &self.r.block(0, k, k, n))?
        } else {
            Matrix::zeros(0, n)
        };
        Ok(())
    }

    /// Largest relative deviation of the maintained ω, γ, `A` from a fresh
    /// recomputation. Relative to the largest entry of each quantity.
    pub fn consistency_error(&self) -> Result<f64> {
        let mut fresh = self.clone();
        fresh.recompute()?;
        let rel = |x: &[f64], y: &[f64]| {
            let scale = y.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            x.iter()
                .zip(y)
                .map(|(p, q)| (p - q).abs() / scale.max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max)
        };
        Ok(rel(&self.omega, &fresh.omega)
            .max(rel(&self.gamma, &fresh.gamma))
            .max(rel(self.a.as_slice(), fresh.a.as_slice())))
    }
}

/// Output of [`srrqr`].
#[derive(Debug, Clone)]
pub struct SrrqrResult {
    pub factorization: PartialQR,
    pub k: usize,
    pub rho: f64,
    pub rho_hat: f64,
    pub swap_count: usize,
    pub f: f64,
}

/// Hard cap on interchanges: `10·k·log_f(n)`.
pub fn swap_limit(k: usize, n: usize, f: f64) -> usize {
    let cap = 10.0 * k as f64 * (n.max(2) as f64).ln() / f.ln();
    (cap.ceil() as usize).max(10)
}

/// Interchange count guaranteed by the determinant argument, `k·log_f √n`.
/// Reported as a statistic only.
pub fn swap_bound(k: usize, n: usize, f: f64) -> f64 {
    k as f64 * (n as f64).sqrt().ln() / f.ln()
}

/// Runs the strong RRQR iteration and returns its final working state.
pub fn srrqr_state(m: &Matrix, cfg: &SrrqrConfig) -> Result<SrrqrState> {
    cfg.validate()?;
    let kmax = m.rows().min(m.cols());
    if let StopRule::TargetRank(r) = cfg.mode {
        if r > kmax {
            return Err(domain(format!(
                "target rank {r} exceeds min(rows, cols) = {kmax}"
            )));
        }
    }
    let mut st = SrrqrState::new(m)?;
    st.updates = cfg.updates;
    loop {
        match cfg.mode {
            StopRule::TargetRank(r) if st.k == r => break,
            StopRule::Tolerance(tau) if st.k == kmax || st.gamma_max() < tau => break,
            _ => {}
        }
        let (j, gmax) = argmax_with_ties(&st.gamma).unwrap_or((0, 0.0));
        if !(gmax >= GAMMA_FLOOR) {
            return Err(Error::RankExhausted {
                step: st.k + 1,
                gamma_max: gmax,
            });
        }
        st.advance(j)?;
        settle(&mut st, cfg.f)?;
    }
    Ok(st)
}

/// Inner loop: swap while some pair gains more than `f`.
fn settle(st: &mut SrrqrState, f: f64) -> Result<()> {
    let limit = swap_limit(st.k, st.cols(), f);
    while st.rho_hat() > f / SQRT_2 {
        let Some((i, j, _)) = st.find_interchange(f) else {
            break;
        };
        if st.swap_count >= limit {
            return Err(Error::SwapLimit {
                limit,
                k: st.k,
                rho: st.rho(),
            });
        }
        st.interchange(i, j)?;
    }
    Ok(())
}

/// Strong rank-revealing QR of `M` under `cfg`.
pub fn srrqr(m: &Matrix, cfg: &SrrqrConfig) -> Result<SrrqrResult> {
    let st = srrqr_state(m, cfg)?;
    if st.k == 0 {
        return Err(domain("no column norm reaches the tolerance"));
    }
    let factorization = partial_qr_permuted(m, &st.perm, st.k)?;
    Ok(SrrqrResult {
        factorization,
        k: st.k,
        rho: st.rho(),
        rho_hat: st.rho_hat(),
        swap_count: st.swap_count,
        f: cfg.f,
    })
}

/// Brute-force swap gains: for every pair, re-factor `M·Π·Π_(i,k+j)` from
/// scratch and compare `|det R₁₁|`. Entry `(i, j)` of the result is the
/// ratio for leading `i`, trailing `j`.
pub fn refactored_det_ratios(m: &Matrix, perm: &PermutationSeq, k: usize) -> Result<Matrix> {
    let n = m.cols();
    let base = log_abs_det_leading(m, perm, k)?;
    let mut out = Matrix::zeros(k, n - k);
    for i in 0..k {
        for j in 0..n - k {
            let mut p = perm.clone();
            p.swap(i, k + j);
            out[(i, j)] = (log_abs_det_leading(m, &p, k)? - base).exp();
        }
    }
    Ok(out)
}

/// `ln |det R₁₁|` of the unpivoted `k`-step QR of `M·Π`.
pub fn log_abs_det_leading(m: &Matrix, perm: &PermutationSeq, k: usize) -> Result<f64> {
    let f = partial_qr_permuted(m, perm, k)?;
    Ok(f.r11.diagonal().iter().map(|d| d.abs().ln()).sum())
}
