mod common;

use common::*;
use proptest::prelude::*;
use rrqr_core::geometry::{cos_angle, cos_angle_subspace, ls_residual};
use rrqr_core::sketch::{embedding_distortion, fwht, SketchKind, SketchOperator};
use rrqr_core::srrqr::SrrqrState;
use rrqr_core::{Matrix, PermutationSeq};

/// Sylvester Hadamard matrix of order `n` built by Kronecker doubling.
fn sylvester(n: usize) -> Vec<Vec<f64>> {
    let mut h = vec![vec![1.0]];
    while h.len() < n {
        let s = h.len();
        let mut next = vec![vec![0.0; 2 * s]; 2 * s];
        for i in 0..s {
            for j in 0..s {
                next[i][j] = h[i][j];
                next[i][j + s] = h[i][j];
                next[i + s][j] = h[i][j];
                next[i + s][j + s] = -h[i][j];
            }
        }
        h = next;
    }
    h
}

#[test]
fn fwht_matches_dense_hadamard() {
    let mut r = rng(1);
    let v = gaussian_vec(16, &mut r);
    let h = sylvester(16);
    let dense: Vec<f64> = h.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
    let mut fast = v.clone();
    fwht(&mut fast).unwrap();
    assert!(max_abs_diff(&fast, &dense) < 1e-12);
}

#[test]
fn srht_matches_dense_materialization() {
    let (d, m) = (5, 16);
    let op = SketchOperator::new(SketchKind::Srht, d, m, 77).unwrap();
    let h = sylvester(m);
    // √(m/d)·P·(H/√m)·D
    let scale = (m as f64 / d as f64).sqrt() / (m as f64).sqrt();
    let dense = Matrix::from_fn(d, m, |i, j| scale * h[op.samples()[i]][j] * op.signs()[j]);
    assert!(op.to_dense().unwrap().sub(&dense).unwrap().max_abs() < 1e-12);
    let mut e1 = vec![0.0; m];
    e1[0] = 1.0;
    let got = op.apply_vec(&e1).unwrap();
    assert!(max_abs_diff(&got, dense.col(0)) < 1e-12);
}

#[test]
fn zero_in_zero_out_and_determinism() {
    for kind in [SketchKind::Gaussian, SketchKind::Srht] {
        let op = SketchOperator::new(kind, 7, 32, 3).unwrap();
        assert_eq!(op.apply(&Matrix::zeros(32, 4)).unwrap(), Matrix::zeros(7, 4));
        let x = gaussian(32, 3, 4);
        let again = SketchOperator::new(kind, 7, 32, 3).unwrap();
        assert_eq!(op.apply(&x).unwrap(), again.apply(&x).unwrap());
        let other = SketchOperator::new(kind, 7, 32, 4).unwrap();
        assert_ne!(op.apply(&x).unwrap(), other.apply(&x).unwrap());
    }
}

#[test]
fn monte_carlo_norm_distortion() {
    let basis = oracle_basis(&gaussian(1024, 20, 5));
    for kind in [SketchKind::Gaussian, SketchKind::Srht] {
        let op = SketchOperator::new(kind, 256, 1024, 6).unwrap();
        let sk = op.apply(&basis).unwrap();
        let mut r = rng(7);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let c = random_unit(20, &mut r);
            let y = sk.mul_vec(&c).unwrap();
            let n2: f64 = y.iter().map(|v| v * v).sum();
            worst = worst.max((n2 - 1.0).abs());
        }
        assert!(worst < 0.6, "{kind}: {worst}");
    }
}

#[test]
fn srht_distortion_over_seeds() {
    // σ_max²(ΩU) concentrates near (1 + √(n/d))², so ε̂ < 1/2 needs d ≳ 20n
    let basis = oracle_basis(&gaussian(1024, 25, 8));
    let eps = |d: usize, seed: u64| {
        let op = SketchOperator::new(SketchKind::Srht, d, 1024, seed).unwrap();
        embedding_distortion(&op, &basis).unwrap()
    };
    let good = (0..100).filter(|&seed| eps(600, seed) < 0.5).count();
    assert!(good >= 95, "{good}/100");
    let at_4n: Vec<f64> = (0..100).map(|seed| eps(100, seed)).collect();
    assert!(at_4n.iter().all(|&e| e > 0.5 && e < 2.0));
}

#[test]
fn distortion_matches_svd_oracle() {
    let basis = oracle_basis(&gaussian(256, 12, 9));
    let op = SketchOperator::new(SketchKind::Gaussian, 80, 256, 10).unwrap();
    let s = oracle_sv(&op.apply(&basis).unwrap());
    let expect = (1.0 - s[11] * s[11]).max(s[0] * s[0] - 1.0);
    let got = embedding_distortion(&op, &basis).unwrap();
    assert!((got - expect).abs() < 1e-12);
}

fn sketch_of(m: &Matrix, kind: SketchKind, d: usize, seed: u64) -> (SketchOperator, Matrix, f64) {
    let op = SketchOperator::new(kind, d, m.rows(), seed).unwrap();
    let eps = embedding_distortion(&op, &oracle_basis(m)).unwrap();
    (op.clone(), op.apply(m).unwrap(), eps)
}

// ε̂ is measured on the same subspace the inequality needs, so any violation
// beyond rounding is a bug.
const SLACK: f64 = 1e-8;

#[test]
fn singular_values_are_preserved() {
    let m = gaussian(1024, 25, 11);
    let sv = oracle_sv(&m);
    for seed in 0..20 {
        let (_, sk, eps) = sketch_of(&m, SketchKind::Srht, 256, seed);
        let svs = oracle_sv(&sk);
        for (a, b) in svs.iter().zip(&sv) {
            let r = a / b;
            assert!(r >= (1.0 - eps).sqrt() * (1.0 - SLACK) && r <= (1.0 + eps).sqrt() * (1.0 + SLACK));
        }
    }
}

#[test]
fn sketched_least_squares_sandwich() {
    for inst in 0..50 {
        let a = gaussian(64, 6, 200 + inst);
        let mut r = rng(300 + inst);
        let b = gaussian_vec(64, &mut r);
        let ab = a.hcat(&Matrix::column_vector(&b)).unwrap();
        let kind = if inst % 2 == 0 { SketchKind::Gaussian } else { SketchKind::Srht };
        let (op, _, eps) = sketch_of(&ab, kind, 32, inst);
        if eps >= 1.0 {
            continue;
        }
        let true_res = ls_residual(&a, &b).unwrap();
        let sa = op.apply(&a).unwrap();
        let sb = op.apply_vec(&b).unwrap();
        let sk_res = ls_residual(&sa, &sb).unwrap();
        let floor = 1e-12 * ab.frobenius_norm();
        assert!(true_res >= sk_res / (1.0 + eps).sqrt() * (1.0 - SLACK) - floor, "{inst}");
        assert!(true_res <= sk_res / (1.0 - eps).sqrt() * (1.0 + SLACK) + floor, "{inst}");
    }
}

#[test]
fn angles_are_preserved() {
    for inst in 0..50u64 {
        let v = gaussian(512, 5, 400 + inst);
        let kind = if inst % 2 == 0 { SketchKind::Gaussian } else { SketchKind::Srht };
        let (op, sk, eps) = sketch_of(&v, kind, 64, inst);
        if eps >= 1.0 {
            continue;
        }
        let tol = 1e-10;
        // two vectors
        let c = cos_angle(v.col(0), v.col(1)).unwrap();
        let cs = cos_angle(sk.col(0), sk.col(1)).unwrap();
        assert!(cs >= (c - eps) / (1.0 + eps) - tol && cs <= (c + eps) / (1.0 - eps) + tol);
        // vector against a subspace
        let k = v.block(0, 512, 2, 5);
        let c = cos_angle_subspace(v.col(0), &k).unwrap();
        let cs = cos_angle_subspace(sk.col(0), &op.apply(&k).unwrap()).unwrap();
        assert!(cs >= (c - eps) / (1.0 + eps) - tol && cs <= (c + eps) / (1.0 - eps) + tol);
    }
}

#[test]
fn swap_gains_are_preserved() {
    let m = gaussian(128, 10, 12);
    let perm = PermutationSeq::identity(10);
    let full = SrrqrState::with_leading(&m, &perm, 5).unwrap();
    for seed in 0..20 {
        let (_, sk, eps) = sketch_of(&m, SketchKind::Srht, 64, seed);
        assert!(eps < 1.0);
        let st = SrrqrState::with_leading(&sk, &perm, 5).unwrap();
        let (lo, hi) = (((1.0 - eps) / (1.0 + eps)).sqrt(), ((1.0 + eps) / (1.0 - eps)).sqrt());
        for i in 0..5 {
            for j in 0..5 {
                let q = full.det_ratio(i, j).unwrap() / st.det_ratio(i, j).unwrap();
                assert!(q >= lo * (1.0 - SLACK) && q <= hi * (1.0 + SLACK), "seed {seed} ({i},{j}): {q}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fwht_is_an_involution(log in 0u32..11, seed in any::<u64>()) {
        let mut r = rng(seed);
        let v = gaussian_vec(1 << log, &mut r);
        let mut w = v.clone();
        fwht(&mut w).unwrap();
        fwht(&mut w).unwrap();
        let n = v.len() as f64;
        let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        for (a, b) in w.iter().zip(&v) {
            prop_assert!((a / n - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn sketches_are_linear(
        seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0,
        kind in prop::sample::select(vec![SketchKind::Gaussian, SketchKind::Srht]),
    ) {
        let op = SketchOperator::new(kind, 12, 64, seed).unwrap();
        let mut r = rng(seed);
        let x = gaussian_vec(64, &mut r);
        let y = gaussian_vec(64, &mut r);
        let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
        let lhs = op.apply_vec(&z).unwrap();
        let (sx, sy) = (op.apply_vec(&x).unwrap(), op.apply_vec(&y).unwrap());
        let rhs: Vec<f64> = sx.iter().zip(&sy).map(|(a, b)| alpha * a + beta * b).collect();
        prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12 * 64.0);
    }
}
