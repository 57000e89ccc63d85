//! Householder QR: blocked unpivoted partial factorization, classical column
//! pivoting, and the `PartialQR` container shared by every factorization in
//! the crate.

use crate::error::{domain, Result};
use crate::matrix::{axpy, dot, norm2, Matrix};
use crate::perm::PermutationSeq;

/// Panel width of the blocked factorization.
const BLOCK: usize = 32;

/// Relative window inside which two trailing column norms count as tied;
/// ties go to the smallest index.
pub const PIVOT_TIE_RTOL: f64 = 1e-10;

/// Turns `x` into a Householder vector with implicit leading one.
///
/// Returns `tau` such that `(I - tau·v·vᵀ)·x = beta·e₁` with `beta ≥ 0`.
/// On return `x[0] = beta` and `x[1..]` holds the tail of `v`.
pub(crate) fn make_reflector(x: &mut [f64]) -> f64 {
    let alpha = x[0];
    let tail = norm2(&x[1..]);
    if tail == 0.0 {
        if alpha >= 0.0 {
            return 0.0;
        }
        // reflect e₁ onto -e₁ so the diagonal ends up nonnegative
        x[0] = -alpha;
        return 2.0;
    }
    let mu = alpha.hypot(tail);
    // v₁ = alpha - mu, computed without cancellation when alpha > 0
    let v1 = if alpha <= 0.0 {
        alpha - mu
    } else {
        -(tail / (alpha + mu)) * tail
    };
    let tau = 2.0 * v1 * v1 / (tail * tail + v1 * v1);
    let inv = 1.0 / v1;
    x[1..].iter_mut().for_each(|t| *t *= inv);
    x[0] = mu;
    tau
}

/// `c := (I - tau·v·vᵀ)·c` with `v = [1; tail]`.
#[inline]
pub(crate) fn apply_reflector(tail: &[f64], tau: f64, c: &mut [f64]) {
    if tau == 0.0 {
        return;
    }
    let (head, rest) = c.split_first_mut().unwrap();
    let s = tau * (*head + dot(tail, rest));
    *head -= s;
    axpy(-s, tail, rest);
}

/// Compact Householder factorization: reflectors below the diagonal of the
/// first `k` columns, `R` on and above it.
#[derive(Debug, Clone)]
struct Compact {
    qr: Matrix,
    tau: Vec<f64>,
    k: usize,
}

impl Compact {
    /// Triangular factor of the block reflector for columns `s..s+nb`
    /// (forward, columnwise storage).
    fn block_t(&self, s: usize, nb: usize) -> Vec<f64> {
        let mut t = vec![0.0; nb * nb];
        for i in 0..nb {
            let tau = self.tau[s + i];
            t[i * nb + i] = tau;
            if i == 0 || tau == 0.0 {
                continue;
            }
            // w_p = v_pᵀ v_i for p < i; v_i has its implicit one at row s+i
            let vi = self.qr.col(s + i);
            let w: Vec<f64> = (0..i)
                .map(|p| {
                    let vp = self.qr.col(s + p);
                    vp[s + i] + dot(&vp[s + i + 1..], &vi[s + i + 1..])
                })
                .collect();
            for r in 0..i {
                let acc: f64 = (r..i).map(|p| t[p * nb + r] * w[p]).sum();
                t[i * nb + r] = -tau * acc;
            }
        }
        t
    }

    /// Blocked Householder reduction of the first `k` columns.
    fn factor(a: Matrix, k: usize) -> Self {
        let (m, n) = a.shape();
        let mut me = Self {
            qr: a,
            tau: vec![0.0; k],
            k,
        };
        let mut s = 0;
        while s < k {
            let nb = BLOCK.min(k - s);
            for j in s..s + nb {
                let tau = make_reflector(&mut me.qr.col_mut(j)[j..]);
                me.tau[j] = tau;
                for c in j + 1..s + nb {
                    let (vcol, ccol) = me.qr.two_cols_mut(j, c);
                    apply_reflector(&vcol[j + 1..], tau, &mut ccol[j..]);
                }
            }
            if s + nb < n {
                let t = me.block_t(s, nb);
                let (head, trailing) = me.qr.as_mut_slice().split_at_mut((s + nb) * m);
                apply_block(&head[s * m..], m, s, nb, &t, true, trailing);
            }
            s += nb;
        }
        me
    }

    fn apply_panel(&self, s: usize, nb: usize, transpose: bool, x: &mut Matrix) {
        let m = self.qr.rows();
        let t = self.block_t(s, nb);
        let panel = &self.qr.as_slice()[s * m..(s + nb) * m];
        apply_block(panel, m, s, nb, &t, transpose, x.as_mut_slice());
    }

    /// `Q·X` for `X` with `m` rows.
    fn apply_q(&self, x: &mut Matrix) {
        let starts: Vec<usize> = (0..self.k).step_by(BLOCK).collect();
        for &s in starts.iter().rev() {
            self.apply_panel(s, BLOCK.min(self.k - s), false, x);
        }
    }

    /// `Qᵀ·X` for `X` with `m` rows.
    fn apply_qt(&self, x: &mut Matrix) {
        for s in (0..self.k).step_by(BLOCK) {
            self.apply_panel(s, BLOCK.min(self.k - s), true, x);
        }
    }
}

/// Applies `I - V·T·Vᵀ` (or `I - V·Tᵀ·Vᵀ` when `transpose`) to every
/// column stored in `target`. `panel` holds the `nb` reflector columns with
/// global indices `s..s+nb`; all columns have length `m`.
fn apply_block(
    panel: &[f64],
    m: usize,
    s: usize,
    nb: usize,
    t: &[f64],
    transpose: bool,
    target: &mut [f64],
) {
    let mut w = vec![0.0; nb];
    let mut y = vec![0.0; nb];
    for col in target.chunks_exact_mut(m) {
        for p in 0..nb {
            let v = &panel[p * m..(p + 1) * m];
            let r = s + p;
            w[p] = col[r] + dot(&v[r + 1..], &col[r + 1..]);
        }
        for r in 0..nb {
            y[r] = if transpose {
                (0..=r).map(|p| t[r * nb + p] * w[p]).sum()
            } else {
                (r..nb).map(|p| t[p * nb + r] * w[p]).sum()
            };
        }
        for p in 0..nb {
            if y[p] == 0.0 {
                continue;
            }
            let v = &panel[p * m..(p + 1) * m];
            let r = s + p;
            col[r] -= y[p];
            axpy(-y[p], &v[r + 1..], &mut col[r + 1..]);
        }
    }
}

/// A `k`-step QR factorization `M·Π = Q·[R₁₁ R₁₂; 0 R₂₂]`.
///
/// `Q` is kept in compact Householder form; [`PartialQR::q_thin`] and
/// [`PartialQR::q_full`] materialize it. The diagonal of `R₁₁` is
/// nonnegative.
#[derive(Debug, Clone)]
pub struct PartialQR {
    compact: Compact,
    pub r11: Matrix,
    pub r12: Matrix,
    pub r22: Matrix,
    pub perm: PermutationSeq,
    pub k: usize,
}

impl PartialQR {
    fn from_compact(compact: Compact, perm: PermutationSeq) -> Self {
        let (m, n) = compact.qr.shape();
        let k = compact.k;
        let mut r11 = compact.qr.block(0, k, 0, k);
        for j in 0..k {
            r11.col_mut(j)[j + 1..].iter_mut().for_each(|x| *x = 0.0);
        }
        let r12 = compact.qr.block(0, k, k, n);
        let r22 = compact.qr.block(k, m, k, n);
        Self {
            compact,
            r11,
            r12,
            r22,
            perm,
            k,
        }
    }

    pub fn rows(&self) -> usize {
        self.compact.qr.rows()
    }

    pub fn cols(&self) -> usize {
        self.compact.qr.cols()
    }

    /// The leading `k` rows `[R₁₁ R₁₂]`.
    pub fn r_top(&self) -> Matrix {
        self.r11.hcat(&self.r12).expect("same row count")
    }

    /// Assembled `m×n` upper-trapezoidal-by-blocks factor `R`.
    pub fn assembled_r(&self) -> Matrix {
        let (m, n) = (self.rows(), self.cols());
        let k = self.k;
        let mut r = Matrix::zeros(m, n);
        for j in 0..n {
            let col = r.col_mut(j);
            if j < k {
                col[..k].copy_from_slice(self.r11.col(j));
            } else {
                col[..k].copy_from_slice(self.r12.col(j - k));
                col[k..].copy_from_slice(self.r22.col(j - k));
            }
        }
        r
    }

    /// Explicit `m×k` orthonormal factor.
    pub fn q_thin(&self) -> Matrix {
        let mut q = Matrix::eye(self.rows(), self.k);
        self.compact.apply_q(&mut q);
        q
    }

    /// Explicit `m×m` orthogonal completion.
    pub fn q_full(&self) -> Matrix {
        let mut q = Matrix::identity(self.rows());
        self.compact.apply_q(&mut q);
        q
    }

    /// `Q·X`.
    pub fn apply_q(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.rows(), self.rows());
        let mut out = x.clone();
        self.compact.apply_q(&mut out);
        out
    }

    /// `Qᵀ·X`.
    pub fn apply_qt(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.rows(), self.rows());
        let mut out = x.clone();
        self.compact.apply_qt(&mut out);
        out
    }

    /// `Q·R`, which should reproduce `M·Π`.
    pub fn reconstruct(&self) -> Matrix {
        let mut r = self.assembled_r();
        self.compact.apply_q(&mut r);
        r
    }

    /// Original column indices of the `k` selected columns.
    pub fn selected_columns(&self) -> &[usize] {
        self.perm.selected(self.k)
    }
}

fn check_k(m: &Matrix, k: usize) -> Result<()> {
    let kmax = m.rows().min(m.cols());
    if k == 0 || k > kmax {
        return Err(domain(format!(
            "k = {k} outside 1..={kmax} for a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(domain("matrix has non-finite entries"));
    }
    Ok(())
}

/// Unpivoted `k`-step Householder QR; the permutation is the identity.
pub fn partial_qr(m: &Matrix, k: usize) -> Result<PartialQR> {
    check_k(m, k)?;
    let compact = Compact::factor(m.clone(), k);
    Ok(PartialQR::from_compact(compact, PermutationSeq::identity(m.cols())))
}

/// Unpivoted `k`-step QR of `M·Π`, recording `Π` in the result.
pub fn partial_qr_permuted(m: &Matrix, perm: &PermutationSeq, k: usize) -> Result<PartialQR> {
    check_k(m, k)?;
    if perm.len() != m.cols() {
        return Err(domain(format!(
            "permutation of size {} for {} columns",
            perm.len(),
            m.cols()
        )));
    }
    let compact = Compact::factor(m.permute_columns(perm), k);
    Ok(PartialQR::from_compact(compact, perm.clone()))
}

/// Thin `R` factor (`n×n`, `n = cols ≤ rows`) of an unpivoted QR.
pub fn thin_r(m: &Matrix) -> Matrix {
    let k = m.cols().min(m.rows());
    let compact = Compact::factor(m.clone(), k);
    let mut r = compact.qr.block(0, k, 0, m.cols());
    for j in 0..k {
        r.col_mut(j)[j + 1..].iter_mut().for_each(|x| *x = 0.0);
    }
    r
}

/// Index of the largest entry, preferring the smallest index among entries
/// within [`PIVOT_TIE_RTOL`] of the maximum.
pub(crate) fn argmax_with_ties(values: &[f64]) -> Option<(usize, f64)> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || !max.is_finite() {
        return None;
    }
    let cut = max * (1.0 - PIVOT_TIE_RTOL);
    values
        .iter()
        .position(|&v| v >= cut)
        .map(|j| (j, values[j]))
}

/// Classical column-pivoted Householder QR stopped after `k` steps.
///
/// At each step the trailing column of largest norm is moved forward.
/// Column norms are downdated and recomputed whenever a downdate loses more
/// than half of the norm.
pub fn qrcp(m: &Matrix, k: usize) -> Result<PartialQR> {
    check_k(m, k)?;
    let n = m.cols();
    let mut a = m.clone();
    let mut perm = PermutationSeq::identity(n);
    let mut tau = vec![0.0; k];
    let mut norms: Vec<f64> = (0..n).map(|j| norm2(a.col(j))).collect();
    let mut exact = norms.clone();
    for step in 0..k {
        let (rel, _) = argmax_with_ties(&norms[step..]).unwrap_or((0, 0.0));
        let p = step + rel;
        a.swap_cols(step, p);
        perm.swap(step, p);
        norms.swap(step, p);
        exact.swap(step, p);
        tau[step] = make_reflector(&mut a.col_mut(step)[step..]);
        for c in step + 1..n {
            let (v, col) = a.two_cols_mut(step, c);
            apply_reflector(&v[step + 1..], tau[step], &mut col[step..]);
            if norms[c] != 0.0 {
                let drop = col[step];
                let updated = (norms[c] * norms[c] - drop * drop).max(0.0).sqrt();
                if updated < 0.5 * exact[c] {
                    norms[c] = norm2(&col[step + 1..]);
                    exact[c] = norms[c];
                } else {
                    norms[c] = updated;
                }
            }
        }
    }
    let compact = Compact { qr: a, tau, k };
    Ok(PartialQR::from_compact(compact, perm))
}
