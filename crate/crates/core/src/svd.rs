//! Singular values by one-sided Jacobi on a pivoted-QR preconditioned factor.
//!
//! The matrix is first reduced to its square triangular factor with column
//! pivoting, then Hestenes rotations orthogonalize the columns of `Rᵀ`.
//! The graded structure left by pivoting makes the sweeps converge quickly and
//! keeps small singular values accurate relative to their own size.

use crate::matrix::{dot, norm2, Matrix};
use crate::qr::qrcp;

const MAX_SWEEPS: usize = 80;
const ROTATION_TOL: f64 = 1e-15;

/// Singular values in descending order; length `min(rows, cols)`.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let tall = if m.rows() >= m.cols() {
        m.clone()
    } else {
        m.transpose()
    };
    let n = tall.cols();
    if n == 0 || tall.rows() == 0 {
        return Vec::new();
    }
    let f = qrcp(&tall, n).expect("k = min(rows, cols) is in range");
    let mut x = f.r11.transpose();
    jacobi_sweeps(&mut x);
    let mut sv: Vec<f64> = (0..n).map(|j| norm2(x.col(j))).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Rotates column pairs of `x` until every pair is numerically orthogonal.
fn jacobi_sweeps(x: &mut Matrix) {
    let n = x.cols();
    let mut norms: Vec<f64> = (0..n).map(|j| dot(x.col(j), x.col(j))).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(x.col(p), x.col(q));
                if gamma.abs() <= ROTATION_TOL * alpha.sqrt() * beta.sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                let (cp, cq) = x.two_cols_mut(p, q);
                for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
                    let (u, v) = (*a, *b);
                    *a = c * u - s * v;
                    *b = s * u + c * v;
                }
                norms[p] = dot(cp, cp);
                norms[q] = dot(cq, cq);
            }
        }
        if !rotated {
            break;
        }
    }
}
