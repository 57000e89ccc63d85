use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rrqr_core::qr::partial_qr_permuted;
use rrqr_core::rand_srrqr::{
    qlp_values, rand_srrqr_rank, rand_srrqr_tol, ratio_report_with_spectrum, Ratios, RunRecord, Timings,
};
use rrqr_core::{
    generate, qrcp, singular_values, srrqr, Matrix, PartialQR, RandSrrqrConfig, RandSrrqrResult, RatioReport,
    SketchKind, SrrqrConfig,
};

use crate::config::{Algo, RunConfig, Target};
use crate::{pool, Result};

/// Exported per-seed record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub experiment: String,
    pub algo: Algo,
    #[serde(flatten)]
    pub run: RunRecord,
}

/// A run with everything the checks need.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub record: Record,
    pub factorization: PartialQR,
    pub report: RatioReport,
    /// Randomized runs only.
    pub rand: Option<RandSrrqrResult>,
}

/// Short name for the matrix family and shape, e.g. `hc_8192x500`.
pub fn experiment_name(cfg: &RunConfig) -> String {
    let kind = serde_json::to_value(&cfg.matrix.kind)
        .ok()
        .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(str::to_owned))
        .unwrap_or_else(|| "matrix".into());
    let (m, n) = cfg.matrix.shape();
    format!("{kind}_{m}x{n}")
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// QRCP stopped at the first pivot norm below `tau`.
fn qrcp_tol(m: &Matrix, tau: f64) -> Result<PartialQR> {
    let full = qrcp(m, m.rows().min(m.cols()))?;
    let k = full.r11.diagonal().iter().take_while(|r| r.abs() >= tau).count().max(1);
    Ok(partial_qr_permuted(m, &full.perm, k)?)
}

fn deterministic(cfg: &RunConfig, m: &Matrix, sigma: &[f64], seed: u64) -> Result<Experiment> {
    let start = Instant::now();
    let (fact, swaps) = match (cfg.algo, cfg.target) {
        (Algo::Qrcp, Target::Rank(k)) => (qrcp(m, k)?, 0),
        (Algo::Qrcp, Target::Tolerance(tau)) => (qrcp_tol(m, tau)?, 0),
        (_, target) => {
            let sc = match target {
                Target::Rank(k) => SrrqrConfig::rank(cfg.f, k)?,
                Target::Tolerance(tau) => SrrqrConfig::tolerance(cfg.f, tau)?,
            };
            let res = srrqr(m, &sc)?;
            (res.factorization, res.swap_count)
        }
    };
    let total = ms(start);
    let report = ratio_report_with_spectrum(&fact, sigma, cfg.f)?;
    let qlp = qlp_values(&fact)?;
    let run = RunRecord {
        k: fact.k,
        seed,
        kind: SketchKind::Identity,
        d: m.rows(),
        f: cfg.f,
        epsilon_measured: Some(0.0),
        ratios: Ratios {
            leading: report.leading_ratios.clone(),
            trailing: report.trailing_ratios.clone(),
        },
        bound: report.bound,
        l_values: qlp.l_values,
        r_values: qlp.r_values,
        swap_count: swaps,
        timings_ms: Timings {
            sketch: 0.0,
            select: total,
            factor: 0.0,
            total,
        },
    };
    Ok(Experiment {
        record: Record {
            experiment: experiment_name(cfg),
            algo: cfg.algo,
            run,
        },
        factorization: fact,
        report,
        rand: None,
    })
}

fn randomized(cfg: &RunConfig, m: &Matrix, sigma: &[f64], seed: u64) -> Result<Experiment> {
    let mut rc = RandSrrqrConfig::new(cfg.f, cfg.sketch, seed).with_sizing(cfg.sizing);
    if let Some(d) = cfg.d {
        rc = rc.with_d(d);
    }
    let res = match cfg.target {
        Target::Rank(k) => rand_srrqr_rank(m, k, &rc)?,
        Target::Tolerance(tau) => rand_srrqr_tol(m, tau, &rc)?,
    };
    let report = ratio_report_with_spectrum(&res.factorization, sigma, res.f_tilde)?;
    let qlp = qlp_values(&res.factorization)?;
    Ok(Experiment {
        record: Record {
            experiment: experiment_name(cfg),
            algo: cfg.algo,
            run: RunRecord::new(&res, &report, &qlp),
        },
        factorization: res.factorization.clone(),
        report,
        rand: Some(res),
    })
}

/// One seed on an already generated matrix with spectrum `sigma`.
pub fn run_seed(cfg: &RunConfig, m: &Matrix, sigma: &[f64], seed: u64) -> Result<Experiment> {
    if cfg.algo.is_randomized() {
        randomized(cfg, m, sigma, seed)
    } else {
        deterministic(cfg, m, sigma, seed)
    }
}

/// Generates the matrix once and runs every seed, results in seed order.
pub fn run_with_matrix(cfg: &RunConfig, m: &Matrix) -> Result<Vec<Experiment>> {
    cfg.validate()?;
    let sigma = singular_values(m);
    pool().install(|| cfg.seeds.par_iter().map(|&s| run_seed(cfg, m, &sigma, s)).collect())
}

pub fn run(cfg: &RunConfig) -> Result<Vec<Experiment>> {
    cfg.validate()?;
    run_with_matrix(cfg, &generate(&cfg.matrix)?)
}
