//! Bound checklist for a configured fixture.

use std::fmt;

use serde::Serialize;

use rrqr_core::geometry::{column_norms, ls_residual, orthonormal_basis};
use rrqr_core::rand_srrqr::{inflated_f, ratio_bound};
use rrqr_core::sketch::{embedding_distortion, pad_to_pow2};
use rrqr_core::{generate, singular_values, Matrix, SketchKind, SketchOperator, SrrqrState};

use crate::config::{RunConfig, Target};
use crate::run::{run_with_matrix, Experiment};
use crate::Result;

/// Relative slack on every comparison.
pub const SLACK: f64 = 1e-8;
/// Spectrum entries below this fraction of `σ₁` are treated as zero.
pub const ZERO_RTOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub seed: u64,
    pub name: &'static str,
    pub measured: f64,
    pub relation: Relation,
    pub limit: f64,
    pub pass: bool,
    /// Set when the check was vacuous for this seed.
    pub skipped: Option<String>,
    /// Reported only; never a violation.
    pub informational: bool,
}

impl Check {
    fn at_most(seed: u64, name: &'static str, measured: f64, limit: f64) -> Self {
        let pass = measured <= limit * (1.0 + SLACK);
        Self { seed, name, measured, relation: Relation::AtMost, limit, pass, skipped: None, informational: false }
    }

    fn at_least(seed: u64, name: &'static str, measured: f64, limit: f64) -> Self {
        let pass = measured >= limit * (1.0 - SLACK);
        Self { seed, name, measured, relation: Relation::AtLeast, limit, pass, skipped: None, informational: false }
    }

    fn skip(seed: u64, name: &'static str, why: String) -> Self {
        Self {
            seed,
            name,
            measured: f64::NAN,
            relation: Relation::AtMost,
            limit: f64::NAN,
            pass: true,
            skipped: Some(why),
            informational: false,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>6}  {:<34} {:>14}    {:>14}  status", "seed", "bound", "measured", "limit")?;
        for c in &self.checks {
            if let Some(why) = &c.skipped {
                writeln!(f, "{:>6}  {:<34} skipped: {why}", c.seed, c.name)?;
                continue;
            }
            let rel = match c.relation {
                Relation::AtMost => "<=",
                Relation::AtLeast => ">=",
            };
            let status = match (c.informational, c.pass) {
                (true, _) => "info",
                (false, true) => "ok",
                (false, false) => "VIOLATED",
            };
            writeln!(f, "{:>6}  {:<34} {:>14.6e} {rel} {:>14.6e}  {status}", c.seed, c.name, c.measured, c.limit)?;
        }
        write!(f, "{} checks, {} violations", self.checks.len(), self.violations())
    }
}

fn ratio_checks(out: &mut Vec<Check>, e: &Experiment, bound: f64) {
    let seed = e.record.run.seed;
    let lead = &e.report.leading_ratios;
    let trail: Vec<f64> = e.report.trailing_ratios.iter().flatten().copied().collect();
    if !lead.is_empty() {
        out.push(Check::at_most(seed, "leading ratio upper", lead.iter().copied().fold(0.0, f64::max), bound));
        out.push(Check::at_least(seed, "leading ratio interlacing", lead.iter().copied().fold(f64::INFINITY, f64::min), 1.0));
    }
    if !trail.is_empty() {
        out.push(Check::at_most(seed, "trailing ratio upper", trail.iter().copied().fold(0.0, f64::max), bound));
        out.push(Check::at_least(seed, "trailing ratio interlacing", trail.iter().copied().fold(f64::INFINITY, f64::min), 1.0));
    }
}

fn deterministic_checks(out: &mut Vec<Check>, m: &Matrix, e: &Experiment, f: f64) -> Result<()> {
    let seed = e.record.run.seed;
    let fact = &e.factorization;
    ratio_checks(out, e, ratio_bound(f, fact.k, fact.cols()));
    if fact.k < fact.cols() {
        out.push(Check::at_most(seed, "max |R11^-1 R12|", e.report.a_max, f));
        let st = SrrqrState::with_leading(m, &fact.perm, fact.k)?;
        out.push(Check::at_most(seed, "swap ratio rho", st.rho(), f));
    }
    Ok(())
}

/// `lo·x − floor ≤ y ≤ hi·x + floor` as two checks on `y/x`.
fn sandwich(out: &mut Vec<Check>, seed: u64, name: &'static str, pairs: &[(f64, f64)], eps: f64, floor: f64) {
    let (lo, hi) = ((1.0 - eps).sqrt(), (1.0 + eps).sqrt());
    let mut worst_lo = f64::INFINITY;
    let mut worst_hi: f64 = 0.0;
    for &(x, y) in pairs {
        if x <= floor {
            if y > hi * x + 2.0 * floor {
                worst_hi = f64::INFINITY;
            }
            continue;
        }
        worst_lo = worst_lo.min((y + floor) / x);
        worst_hi = worst_hi.max((y - floor) / x);
    }
    if worst_lo.is_finite() {
        out.push(Check::at_least(seed, name, worst_lo, lo));
    }
    out.push(Check::at_most(seed, name, worst_hi, hi));
}

fn randomized_checks(out: &mut Vec<Check>, m: &Matrix, sigma: &[f64], cfg: &RunConfig, e: &Experiment) -> Result<()> {
    let res = e.rand.as_ref().expect("randomized experiment");
    let seed = e.record.run.seed;
    let padded = if res.kind == SketchKind::Srht { pad_to_pow2(m) } else { m.clone() };
    let op = SketchOperator::new(res.kind, res.d, padded.rows(), seed)?;
    let eps = embedding_distortion(&op, &orthonormal_basis(&padded)?)?;
    out.push(Check::at_most(seed, "measured distortion", eps, 1.0).informational());
    if eps >= 1.0 {
        out.push(Check::skip(seed, "sketched bounds", format!("distortion {eps:.3} >= 1")));
        return Ok(());
    }
    let f_tilde = inflated_f(cfg.f, eps);
    let fact = &e.factorization;
    let (k, n) = (fact.k, fact.cols());
    let scale = sigma.first().copied().unwrap_or(0.0);
    let floor = 1e-12 * scale.max(f64::MIN_POSITIVE);

    let s_sk = singular_values(&res.sketch);
    let pairs: Vec<(f64, f64)> = sigma
        .iter()
        .zip(&s_sk)
        .filter(|(s, _)| **s > ZERO_RTOL * scale)
        .map(|(&s, &t)| (s, t))
        .collect();
    sandwich(out, seed, "sketch singular values", &pairs, eps, floor);

    ratio_checks(out, e, ratio_bound(f_tilde, k, n));
    if k < n {
        out.push(Check::at_most(seed, "max |R11^-1 R12| (inflated f)", e.report.a_max, f_tilde));
        let full = SrrqrState::with_leading(m, &fact.perm, k)?;
        out.push(Check::at_most(seed, "swap ratio rho (inflated f)", full.rho(), f_tilde));

        let sk = &res.sketch_result.factorization;
        let g = column_norms(&fact.r22);
        let gs = column_norms(&sk.r22);
        let pairs: Vec<(f64, f64)> = g.iter().copied().zip(gs.iter().copied()).collect();
        sandwich(out, seed, "trailing column norms", &pairs, eps, floor);
        let fro = [(fact.r22.frobenius_norm(), sk.r22.frobenius_norm())];
        sandwich(out, seed, "trailing Frobenius norm", &fro, eps, floor);

        // residual of the summed trailing columns against the leading block
        let order = fact.perm.forward();
        let lead = m.select_columns(&order[..k]);
        let mut b = vec![0.0; m.rows()];
        for &j in &order[k..] {
            b.iter_mut().zip(m.col(j)).for_each(|(x, y)| *x += y);
        }
        let lead_sk = op.apply(&lead.pad_rows(padded.rows()))?;
        let mut b_pad = b.clone();
        b_pad.resize(padded.rows(), 0.0);
        let r = ls_residual(&lead, &b)?;
        let rs = ls_residual(&lead_sk, &op.apply_vec(&b_pad)?)?;
        sandwich(out, seed, "least-squares residual", &[(r, rs)], eps, floor);

        // Swap gains below 1e-6 carry no digits to compare.
        let st_sk = SrrqrState::with_leading(&res.sketch, &fact.perm, k)?;
        let (lo, hi) = (((1.0 - eps) / (1.0 + eps)).sqrt(), ((1.0 + eps) / (1.0 - eps)).sqrt());
        let mut q_lo = f64::INFINITY;
        let mut q_hi: f64 = 0.0;
        for i in 0..k {
            for j in 0..n - k {
                let a = full.det_ratio(i, j)?;
                if a < 1e-6 {
                    continue;
                }
                let q = a / st_sk.det_ratio(i, j)?;
                q_lo = q_lo.min(q);
                q_hi = q_hi.max(q);
            }
        }
        if q_lo.is_finite() {
            out.push(Check::at_least(seed, "swap gain quotient", q_lo, lo));
            out.push(Check::at_most(seed, "swap gain quotient", q_hi, hi));
        }
    }
    if let Target::Tolerance(tau) = cfg.target {
        let g = column_norms(&fact.r22).into_iter().fold(0.0, f64::max);
        out.push(Check::at_most(seed, "tolerance certificate", g, tau / (1.0 - eps).sqrt()));
    }
    Ok(())
}

impl Check {
    /// Reported, never counted as a violation.
    fn informational(mut self) -> Self {
        self.pass = true;
        self.informational = true;
        self
    }
}

/// Runs the configured fixture on `m` and every applicable bound check.
pub fn verify_matrix(cfg: &RunConfig, m: &Matrix) -> Result<Report> {
    let sigma = singular_values(m);
    let runs = run_with_matrix(cfg, m)?;
    let mut checks = Vec::new();
    for e in &runs {
        if cfg.algo.is_randomized() {
            randomized_checks(&mut checks, m, &sigma, cfg, e)?;
        } else {
            deterministic_checks(&mut checks, m, e, cfg.f)?;
        }
    }
    Ok(Report { checks })
}

pub fn verify(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    verify_matrix(cfg, &generate(&cfg.matrix)?)
}
