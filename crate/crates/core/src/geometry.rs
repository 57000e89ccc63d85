//! Column geometry: norms, triangular solves, volumes, least-squares
//! residuals and angles.

use crate::error::{domain, Error, Result};
use crate::matrix::{axpy, dot, norm2, Matrix};
use crate::qr::{partial_qr, qrcp, thin_r};

/// Relative diagonal threshold below which a pivoted-QR column is treated as
/// numerically dependent.
pub const RANK_RTOL: f64 = 1e-14;

/// ℓ₂ norm of every column (γ₁ … γₙ).
pub fn column_norms(m: &Matrix) -> Vec<f64> {
    (0..m.cols()).map(|j| norm2(m.col(j))).collect()
}

fn check_upper_square(r: &Matrix) -> Result<()> {
    if r.rows() != r.cols() {
        return Err(Error::Dimension(format!(
            "triangular factor must be square, got {:?}",
            r.shape()
        )));
    }
    if let Some(i) = (0..r.rows()).find(|&i| r[(i, i)] == 0.0) {
        return Err(Error::Singular { index: i });
    }
    Ok(())
}

/// Solves `R·x = b` for upper-triangular `R` (back substitution).
pub fn solve_upper(r: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    check_upper_square(r)?;
    if b.len() != r.rows() {
        return Err(Error::Dimension(format!(
            "rhs of length {} for order {}",
            b.len(),
            r.rows()
        )));
    }
    let mut x = b.to_vec();
    for j in (0..r.cols()).rev() {
        x[j] /= r[(j, j)];
        let xj = x[j];
        if xj != 0.0 {
            axpy(-xj, &r.col(j)[..j], &mut x[..j]);
        }
    }
    Ok(x)
}

/// Solves `Rᵀ·x = b` for upper-triangular `R` (forward substitution).
pub fn solve_upper_transposed(r: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    check_upper_square(r)?;
    let mut x = b.to_vec();
    for j in 0..r.cols() {
        x[j] = (x[j] - dot(&r.col(j)[..j], &x[..j])) / r[(j, j)];
    }
    Ok(x)
}

/// `R⁻¹·B` for upper-triangular `R`, column by column.
pub fn solve_upper_matrix(r: &Matrix, b: &Matrix) -> Result<Matrix> {
    let mut out = Matrix::zeros(b.rows(), b.cols());
    for j in 0..b.cols() {
        let x = solve_upper(r, b.col(j))?;
        out.col_mut(j).copy_from_slice(&x);
    }
    Ok(out)
}

/// ℓ₂ norm of row `i` of `R⁻¹`, from one transposed solve against `eᵢ`.
pub fn inverse_row_norm(r: &Matrix, i: usize) -> Result<f64> {
    check_upper_square(r)?;
    let k = r.rows();
    // row i of R⁻¹ is (R⁻ᵀ eᵢ)ᵀ, and its first i entries vanish
    let mut x = vec![0.0; k];
    x[i] = 1.0 / r[(i, i)];
    for j in i + 1..k {
        x[j] = -dot(&r.col(j)[i..j], &x[i..j]) / r[(j, j)];
    }
    Ok(norm2(&x[i..]))
}

/// ℓ₂ norms of the rows of `R⁻¹` (ω₁ … ωₖ).
pub fn inverse_row_norms(r: &Matrix) -> Result<Vec<f64>> {
    check_upper_square(r)?;
    (0..r.rows()).map(|i| inverse_row_norm(r, i)).collect()
}

/// Volume `√det(MᵀM)`: product of the absolute diagonal of the thin `R`.
pub fn volume(m: &Matrix) -> Result<f64> {
    if m.cols() > m.rows() {
        return Err(domain(format!(
            "volume needs cols <= rows, got {:?}",
            m.shape()
        )));
    }
    Ok(thin_r(m).diagonal().iter().map(|d| d.abs()).product())
}

/// Natural log of the volume, safe for products that underflow.
pub fn log_volume(m: &Matrix) -> Result<f64> {
    if m.cols() > m.rows() {
        return Err(domain(format!(
            "volume needs cols <= rows, got {:?}",
            m.shape()
        )));
    }
    Ok(thin_r(m).diagonal().iter().map(|d| d.abs().ln()).sum())
}

/// Numerical rank of a pivoted QR: diagonal entries above
/// `RANK_RTOL·‖A‖_F`.
fn numerical_rank(diag: &[f64], scale: f64) -> usize {
    diag.iter().take_while(|d| d.abs() > RANK_RTOL * scale).count()
}

/// `‖(I − P_A)·b‖₂`, the least-squares residual of `min ‖A·x − b‖₂`.
///
/// Rank-deficient `A` is handled by projecting onto the leading block of a
/// pivoted QR whose diagonal clears `RANK_RTOL·‖A‖_F`.
pub fn ls_residual(a: &Matrix, b: &[f64]) -> Result<f64> {
    if b.len() != a.rows() {
        return Err(Error::Dimension(format!(
            "rhs of length {} for {} rows",
            b.len(),
            a.rows()
        )));
    }
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok(norm2(b));
    }
    let k = a.rows().min(a.cols());
    let f = qrcp(a, k)?;
    let rank = numerical_rank(&f.r11.diagonal(), scale);
    let qtb = f.apply_qt(&Matrix::column_vector(b));
    Ok(norm2(&qtb.col(0)[rank..]))
}

/// Orthonormal basis of `range(M)` from a rank-revealing pivoted QR.
pub fn orthonormal_basis(m: &Matrix) -> Result<Matrix> {
    let scale = m.frobenius_norm();
    if scale == 0.0 {
        return Err(domain("zero matrix has an empty range"));
    }
    let k = m.rows().min(m.cols());
    let f = qrcp(m, k)?;
    let rank = numerical_rank(&f.r11.diagonal(), scale).max(1);
    Ok(f.q_thin().block(0, m.rows(), 0, rank))
}

/// Cosine of the angle between two nonzero vectors, in `[-1, 1]`.
pub fn cos_angle(v1: &[f64], v2: &[f64]) -> Result<f64> {
    if v1.len() != v2.len() {
        return Err(Error::Dimension(format!(
            "vectors of length {} and {}",
            v1.len(),
            v2.len()
        )));
    }
    let (n1, n2) = (norm2(v1), norm2(v2));
    if n1 == 0.0 || n2 == 0.0 {
        return Err(domain("angle with a zero vector is undefined"));
    }
    Ok((dot(v1, v2) / n1 / n2).clamp(-1.0, 1.0))
}

/// Cosine of the angle between `v` and `range(basis)`: `‖P·v‖ / ‖v‖`.
pub fn cos_angle_subspace(v: &[f64], basis: &Matrix) -> Result<f64> {
    if v.len() != basis.rows() {
        return Err(Error::Dimension(format!(
            "vector of length {} against {} rows",
            v.len(),
            basis.rows()
        )));
    }
    let nv = norm2(v);
    if nv == 0.0 {
        return Err(domain("angle with a zero vector is undefined"));
    }
    let f = partial_qr(basis, basis.cols())?;
    if let Some(i) = f
        .r11
        .diagonal()
        .iter()
        .position(|d| d.abs() <= RANK_RTOL * basis.frobenius_norm())
    {
        return Err(domain(format!(
            "basis is rank deficient at column {i}"
        )));
    }
    let qtv = f.apply_qt(&Matrix::column_vector(v));
    Ok((norm2(&qtv.col(0)[..basis.cols()]) / nv).clamp(0.0, 1.0))
}
