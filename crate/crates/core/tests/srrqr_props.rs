mod common;

use common::*;
use proptest::prelude::*;
use rrqr_core::qr::partial_qr_permuted;
use rrqr_core::srrqr::{
    qrcp, srrqr, srrqr_state, SrrqrConfig, SrrqrState, StopRule, UpdateStrategy,
};
use rrqr_core::{testmat, Error, Matrix, PermutationSeq};

fn bound(f: f64, k: usize, n: usize) -> f64 {
    (1.0 + f * f * (k * (n - k)) as f64).sqrt()
}

/// Row-sign-normalized copy of the first `k` rows.
fn sign_normalized(r: &Matrix, k: usize) -> Matrix {
    Matrix::from_fn(k, r.cols(), |i, j| r[(i, j)] * r[(i, i)].signum())
}

#[test]
fn swap_gains_match_refactoring() {
    let m = gaussian(8, 6, 1);
    let perm = PermutationSeq::identity(6);
    let st = SrrqrState::with_leading(&m, &perm, 3).unwrap();
    let oracle = oracle_swap_ratios(&m, &perm, 3);
    let mut best: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let got = st.det_ratio(i, j).unwrap();
            assert!((got / oracle[i][j] - 1.0).abs() < 1e-8, "({i},{j}): {got} vs {}", oracle[i][j]);
            best = best.max(oracle[i][j]);
        }
    }
    assert!((st.rho() / best - 1.0).abs() < 1e-8);
}

#[test]
fn interchange_equals_refactored_permutation() {
    let m = gaussian(8, 6, 2);
    let st = SrrqrState::with_leading(&m, &PermutationSeq::identity(6), 3).unwrap();
    for (i, j) in [(0, 0), (1, 2), (2, 1)] {
        let next = st.interchanged(i, j).unwrap();
        let mut expect_perm = PermutationSeq::identity(6);
        expect_perm.swap(i, 3 + j);
        assert_eq!(next.perm().forward(), expect_perm.forward());
        let fresh = partial_qr_permuted(&m, &expect_perm, 3).unwrap();
        let got_top = sign_normalized(next.r(), 3);
        let want_top = sign_normalized(&fresh.assembled_r(), 3);
        assert!(got_top.sub(&want_top).unwrap().max_abs() < 1e-10);
        // R₂₂ is unique only up to a left orthogonal factor
        let g1 = next.r22().t_matmul(&next.r22()).unwrap();
        let g2 = fresh.r22.t_matmul(&fresh.r22).unwrap();
        assert!(g1.sub(&g2).unwrap().max_abs() < 1e-10);
        assert!(next.consistency_error().unwrap() < 1e-8);
    }
}

#[test]
fn qrcp_examples() {
    let f = qrcp(&Matrix::from_diagonal(&[1.0, 2.0, 3.0]), 3).unwrap();
    assert_eq!(f.perm.forward(), &[2, 1, 0]);
    assert_eq!(f.r11.diagonal(), vec![3.0, 2.0, 1.0]);
    let f = qrcp(&gaussian(8, 5, 3), 5).unwrap();
    let d: Vec<f64> = f.r11.diagonal().iter().map(|x| x.abs()).collect();
    assert!(d.windows(2).all(|w| w[0] >= w[1]));
    let k = testmat::kahan(30, 0.9);
    let f = qrcp(&k, 30).unwrap();
    assert!(f.perm.is_identity());
    let signs = Matrix::from_fn(30, 30, |i, j| f.r11[(i, j)] * f.r11[(i, i)].signum());
    assert!(signs.sub(&k).unwrap().max_abs() < 1e-14);
}

#[test]
fn kahan_contrast_with_qrcp() {
    let m = testmat::kahan(40, 0.99);
    let sv = oracle_sv(&m);
    let res = srrqr(&m, &SrrqrConfig::rank(2.0, 39).unwrap()).unwrap();
    let s11 = oracle_sv(&res.factorization.r11);
    let last = sv[38] / s11[38];
    assert!(last >= 1.0 - 1e-8 && last <= bound(2.0, 39, 40), "last ratio {last}");
    let q = qrcp(&m, 39).unwrap();
    let q_last = sv[38] / oracle_sv(&q.r11)[38];
    assert!(q_last > 10.0 * last, "qrcp {q_last} vs srrqr {last}");
}

#[test]
fn rank_beyond_numerical_rank_fails() {
    let m = gaussian(10, 3, 4).hcat(&Matrix::zeros(10, 3)).unwrap();
    match srrqr(&m, &SrrqrConfig::rank(2.0, 5).unwrap()) {
        Err(Error::RankExhausted { step, gamma_max }) => {
            assert_eq!(step, 4);
            assert_eq!(gamma_max, 0.0);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn zero_trailing_spectrum_gives_zero_r22() {
    // rank 4 matrix, k = 2: σ_{j+2}(M) = 0 for j ≥ 3 so σ_j(R₂₂) = 0 there
    let m = gaussian(12, 4, 6).matmul(&gaussian(4, 8, 7)).unwrap();
    let res = srrqr(&m, &SrrqrConfig::rank(2.0, 2).unwrap()).unwrap();
    let s22 = oracle_sv(&res.factorization.r22);
    let scale = oracle_sv(&m)[0];
    for s in &s22[2..] {
        assert!(*s <= 1e-12 * scale.max(1.0), "{s}");
    }
}

#[test]
fn determinant_grows_by_f_per_swap() {
    let f = 1.05;
    for seed in 0..10 {
        let m = gaussian(20, 15, 100 + seed);
        let mut st = SrrqrState::new(&m).unwrap();
        for _ in 0..7 {
            let (j, _) = st
                .gamma()
                .iter()
                .enumerate()
                .fold((0, -1.0), |b, (j, &g)| if g > b.1 { (j, g) } else { b });
            st.advance(j).unwrap();
            while let Some((i, j, _)) = st.find_interchange(f) {
                let before = st.log_abs_det_r11();
                st.interchange(i, j).unwrap();
                let gain = (st.log_abs_det_r11() - before).exp();
                assert!(gain >= f * (1.0 - 1e-8), "gain {gain}");
            }
            assert!(st.rho() <= f * (1.0 + 1e-10));
        }
    }
}

#[test]
fn tolerance_and_rank_modes_agree() {
    // spectrum with a wide gap after 5 values
    let mut sigma = vec![1.0, 0.8, 0.6, 0.5, 0.4];
    sigma.extend([1e-6, 5e-7, 2e-7, 1e-7]);
    let u = oracle_basis(&gaussian(30, 9, 8));
    let v = oracle_basis(&gaussian(9, 9, 9));
    let mut us = u.clone();
    for (j, s) in sigma.iter().enumerate() {
        us.col_mut(j).iter_mut().for_each(|x| *x *= s);
    }
    let m = us.matmul(&v.transpose()).unwrap();
    let tol = srrqr(&m, &SrrqrConfig::tolerance(2.0, 1e-3).unwrap()).unwrap();
    assert_eq!(tol.k, 5);
    let rank = srrqr(&m, &SrrqrConfig::rank(2.0, 5).unwrap()).unwrap();
    assert_eq!(tol.factorization.perm.forward(), rank.factorization.perm.forward());
}

fn check_strong_rrqr(m: &Matrix, f: f64, k: usize, updates: UpdateStrategy) -> Result<(), TestCaseError> {
    let n = m.cols();
    let cfg = SrrqrConfig::rank(f, k).unwrap().with_updates(updates);
    let st = srrqr_state(m, &cfg).unwrap();
    prop_assert!(st.consistency_error().unwrap() < 1e-8);
    prop_assert!(st.rho() <= f * (1.0 + 1e-10));
    prop_assert!(st.rho_hat() <= st.rho() * (1.0 + 1e-12));
    prop_assert!(st.rho() <= 2f64.sqrt() * st.rho_hat() * (1.0 + 1e-12));
    let res = srrqr(m, &cfg).unwrap();
    prop_assert_eq!(res.factorization.perm.forward(), st.perm().forward());
    for row in oracle_swap_ratios(m, &res.factorization.perm, k) {
        for r in row {
            prop_assert!(r <= f * (1.0 + 1e-8), "swap ratio {}", r);
        }
    }
    let fact = &res.factorization;
    let sv = oracle_sv(m);
    let s11 = oracle_sv(&fact.r11);
    let s22 = oracle_sv(&fact.r22);
    let q = bound(f, k, n);
    for i in 0..k {
        let r = sv[i] / s11[i];
        prop_assert!(r >= 1.0 - 1e-8 && r <= q, "leading {} = {}", i, r);
    }
    for j in 0..sv.len() - k {
        let r = s22[j] / sv[j + k];
        prop_assert!(r >= 1.0 - 1e-8 && r <= q, "trailing {} = {}", j, r);
    }
    let a = rrqr_core::geometry::solve_upper_matrix(&fact.r11, &fact.r12).unwrap();
    prop_assert!(a.max_abs() <= f + 1e-8);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn strong_rrqr_postconditions(
        rows in 8usize..24, cols in 4usize..12, kf in 0.1f64..0.9, seed in any::<u64>(),
        f in prop::sample::select(vec![1.01, 1.5, 2.0]),
    ) {
        let cols = cols.min(rows);
        let k = ((cols as f64 * kf) as usize).clamp(1, cols - 1);
        let m = gaussian(rows, cols, seed);
        check_strong_rrqr(&m, f, k, UpdateStrategy::Incremental)?;
    }

    #[test]
    fn recompute_path_agrees(rows in 6usize..16, cols in 3usize..8, seed in any::<u64>()) {
        let cols = cols.min(rows);
        let k = cols / 2;
        let m = gaussian(rows, cols, seed);
        let a = srrqr_state(&m, &SrrqrConfig::rank(1.1, k).unwrap()).unwrap();
        let b = srrqr_state(
            &m,
            &SrrqrConfig::rank(1.1, k).unwrap().with_updates(UpdateStrategy::Recompute),
        ).unwrap();
        prop_assert_eq!(a.perm().forward(), b.perm().forward());
        check_strong_rrqr(&m, 1.1, k, UpdateStrategy::Recompute)?;
    }

    #[test]
    fn wide_matrices(cols in 6usize..12, seed in any::<u64>()) {
        let m = gaussian(4, cols, seed);
        let res = srrqr(&m, &SrrqrConfig::rank(1.5, 4).unwrap()).unwrap();
        let st = srrqr_state(&m, &SrrqrConfig::rank(1.5, 4).unwrap()).unwrap();
        prop_assert!(st.rho() <= 1.5 * (1.0 + 1e-10));
        for row in oracle_swap_ratios(&m, &res.factorization.perm, 4) {
            for r in row {
                prop_assert!(r <= 1.5 * (1.0 + 1e-8));
            }
        }
    }

    #[test]
    fn tolerance_mode_certificate(seed in any::<u64>(), tau in 0.05f64..2.0) {
        let m = gaussian(15, 10, seed);
        let res = srrqr(&m, &SrrqrConfig::tolerance(2.0, tau).unwrap());
        let top = m.frobenius_norm();
        match res {
            Ok(res) => {
                let r22 = &res.factorization.r22;
                let gmax = (0..r22.cols())
                    .map(|j| rrqr_core::matrix::norm2(r22.col(j)))
                    .fold(0.0, f64::max);
                prop_assert!(res.k == 10 || gmax < tau);
                prop_assert!(res.rho <= 2.0 * (1.0 + 1e-10));
            }
            Err(_) => prop_assert!(tau > top / 10.0),
        }
    }
}

#[test]
fn config_round_trips_as_json() {
    let cfg = SrrqrConfig::tolerance(2.0, 1e-10).unwrap();
    let s = serde_json::to_string(&cfg).unwrap();
    let back: SrrqrConfig = serde_json::from_str(&s).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.mode, StopRule::Tolerance(1e-10));
}
