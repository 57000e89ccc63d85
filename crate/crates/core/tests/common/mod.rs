#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rrqr_core::{Matrix, PermutationSeq};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x5ee_d0f7_e575)
}

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut r = rng(seed);
    Matrix::from_fn(rows, cols, |_, _| r.sample(StandardNormal))
}

pub fn gaussian_vec(len: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| r.sample(StandardNormal)).collect()
}

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn from_na(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_col_major(m.nrows(), m.ncols(), m.as_slice().to_vec()).unwrap()
}

/// Singular values, descending, from nalgebra's SVD.
pub fn oracle_sv(m: &Matrix) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = to_na(m).svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `ln √det(AᵀA)` for the listed columns, via nalgebra QR.
pub fn oracle_log_volume(m: &Matrix, cols: &[usize]) -> f64 {
    let a = to_na(&m.select_columns(cols));
    let r = a.qr().r();
    (0..cols.len()).map(|i| r[(i, i)].abs().ln()).sum()
}

/// `|det R̄₁₁ / det R₁₁|` for every (leading i, trailing j) swap of the
/// column order `perm` at rank `k`, from volumes computed from scratch.
pub fn oracle_swap_ratios(m: &Matrix, perm: &PermutationSeq, k: usize) -> Vec<Vec<f64>> {
    let order = perm.forward();
    let base = oracle_log_volume(m, &order[..k]);
    (0..k)
        .map(|i| {
            (k..order.len())
                .map(|j| {
                    let mut sel = order[..k].to_vec();
                    sel[i] = order[j];
                    (oracle_log_volume(m, &sel) - base).exp()
                })
                .collect()
        })
        .collect()
}

/// Orthonormal basis of the column span of a full-rank `m`.
pub fn oracle_basis(m: &Matrix) -> Matrix {
    let q = to_na(m).qr().q();
    from_na(&q)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn random_unit(len: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    let v = gaussian_vec(len, r);
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

pub fn uniform(r: &mut ChaCha8Rng) -> f64 {
    r.gen()
}
