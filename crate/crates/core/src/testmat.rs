//! Seeded test matrices.
//!
//! Random orthogonal factors come from the Q factor of a seeded standard
//! Gaussian matrix (R diagonal kept nonnegative, so Q is Haar distributed).
//! A single ChaCha stream per spec draws, in order, `U`, then `V`, then any
//! additive noise.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::matrix::Matrix;
use crate::qr::partial_qr;

pub const DEFAULT_KAHAN_S: f64 = 0.99;
pub const DEFAULT_STAIRS_Q: f64 = 1e-3;
pub const DEFAULT_STAIR_LEN: usize = 100;
pub const DEFAULT_STEWART_Q: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixKind {
    /// `diag(1, s, …, s^{n−1})·(I − c·strict_upper_ones)`, zero-padded below
    /// to `pad_to_m` rows.
    Kahan { n: usize, s: f64, pad_to_m: usize },
    /// `U·Σ·Vᵀ` with `σ_i = q^⌊i/stair_len⌋` (zero-based `i`).
    DevilsStairs { m: usize, n: usize, q: f64, stair_len: usize },
    /// `U·Σ·Vᵀ + c·rand` with `σ = (1, q, …, q^{n/2}, 0, …)` and `c = q^{n/2}`.
    Stewart { m: usize, n: usize, q: f64 },
    /// `U·Σ` with `σ = (100, 10, logspace(1e-2, 1e-14, n − 2))`.
    Hc { m: usize, n: usize },
    /// `n` distinct columns of `I_m`.
    SampledIdentity { m: usize, n: usize },
    /// i.i.d. standard Gaussian entries.
    Random { m: usize, n: usize },
    /// `diag(values)` zero-padded below to `m` rows.
    Diagonal { values: Vec<f64>, m: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSpec {
    #[serde(flatten)]
    pub kind: MatrixKind,
    #[serde(default)]
    pub seed: u64,
}

impl MatrixSpec {
    pub fn new(kind: MatrixKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    pub fn shape(&self) -> (usize, usize) {
        match &self.kind {
            MatrixKind::Kahan { n, pad_to_m, .. } => (*pad_to_m, *n),
            MatrixKind::DevilsStairs { m, n, .. }
            | MatrixKind::Stewart { m, n, .. }
            | MatrixKind::Hc { m, n }
            | MatrixKind::SampledIdentity { m, n }
            | MatrixKind::Random { m, n } => (*m, *n),
            MatrixKind::Diagonal { values, m } => (*m, values.len()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = self.shape();
        if n == 0 || m < n {
            return Err(domain(format!("need rows >= cols >= 1, got {m}x{n}")));
        }
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(domain(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        match &self.kind {
            MatrixKind::Kahan { s, .. } => unit("s", *s),
            MatrixKind::DevilsStairs { q, stair_len, .. } => {
                if *stair_len == 0 {
                    return Err(domain("stair length must be positive"));
                }
                unit("q", *q)
            }
            MatrixKind::Stewart { q, .. } => unit("q", *q),
            MatrixKind::Hc { n, .. } if *n < 2 => Err(domain("HC needs at least 2 columns")),
            MatrixKind::Diagonal { values, .. } if values.iter().any(|v| !v.is_finite()) => {
                Err(domain("diagonal entries must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// Prescribed singular values, where the construction fixes them.
    pub fn prescribed_singular_values(&self) -> Option<Vec<f64>> {
        match &self.kind {
            MatrixKind::DevilsStairs { n, q, stair_len, .. } => Some(stairs_spectrum(*n, *q, *stair_len)),
            MatrixKind::Stewart { n, q, .. } => Some(stewart_spectrum(*n, *q)),
            MatrixKind::Hc { n, .. } => Some(hc_spectrum(*n)),
            MatrixKind::SampledIdentity { n, .. } => Some(vec![1.0; *n]),
            MatrixKind::Diagonal { values, .. } => {
                let mut v: Vec<f64> = values.iter().map(|x| x.abs()).collect();
                v.sort_by(|a, b| b.total_cmp(a));
                Some(v)
            }
            _ => None,
        }
    }
}

pub fn stairs_spectrum(n: usize, q: f64, stair_len: usize) -> Vec<f64> {
    (0..n).map(|i| q.powi((i / stair_len) as i32)).collect()
}

pub fn stewart_spectrum(n: usize, q: f64) -> Vec<f64> {
    (0..n)
        .map(|i| if i <= n / 2 { q.powi(i as i32) } else { 0.0 })
        .collect()
}

pub fn hc_spectrum(n: usize) -> Vec<f64> {
    let mut s = vec![100.0, 10.0];
    let t = n - 2;
    let (lo, hi) = (-2.0f64, -14.0f64);
    s.extend((0..t).map(|i| {
        let frac = if t == 1 { 0.0 } else { i as f64 / (t - 1) as f64 };
        10f64.powf(lo + (hi - lo) * frac)
    }));
    s
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut g = Matrix::zeros(rows, cols);
    for x in g.as_mut_slice() {
        *x = rng.sample(StandardNormal);
    }
    g
}

/// Haar-distributed `rows × cols` matrix with orthonormal columns.
pub fn random_orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let g = gaussian(rows, cols, rng);
    partial_qr(&g, cols).expect("cols <= rows").q_thin()
}

/// `U·diag(σ)·Vᵀ` with fresh random `U` (m×n) and `V` (n×n).
fn svd_product(m: usize, sigma: &[f64], rng: &mut ChaCha8Rng) -> Matrix {
    let n = sigma.len();
    let mut u = random_orthonormal(m, n, rng);
    let v = random_orthonormal(n, n, rng);
    for (j, s) in sigma.iter().enumerate() {
        u.col_mut(j).iter_mut().for_each(|x| *x *= s);
    }
    u.matmul(&v.transpose()).expect("conforming")
}

pub fn kahan(n: usize, s: f64) -> Matrix {
    let c = (1.0 - s * s).sqrt();
    Matrix::from_fn(n, n, |i, j| {
        let scale = s.powi(i as i32);
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => scale,
            std::cmp::Ordering::Less => -c * scale,
            std::cmp::Ordering::Greater => 0.0,
        }
    })
}

pub fn generate(spec: &MatrixSpec) -> Result<Matrix> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok(match &spec.kind {
        MatrixKind::Kahan { n, s, pad_to_m } => kahan(*n, *s).pad_rows(*pad_to_m),
        MatrixKind::DevilsStairs { m, n, q, stair_len } => {
            svd_product(*m, &stairs_spectrum(*n, *q, *stair_len), &mut rng)
        }
        MatrixKind::Stewart { m, n, q } => {
            let mut a = svd_product(*m, &stewart_spectrum(*n, *q), &mut rng);
            let c = q.powi((*n / 2) as i32);
            for x in a.as_mut_slice() {
                *x += c * rng.gen::<f64>();
            }
            a
        }
        MatrixKind::Hc { m, n } => {
            let mut u = random_orthonormal(*m, *n, &mut rng);
            for (j, s) in hc_spectrum(*n).iter().enumerate() {
                u.col_mut(j).iter_mut().for_each(|x| *x *= s);
            }
            u
        }
        MatrixKind::SampledIdentity { m, n } => {
            let mut idx: Vec<usize> = (0..*m).collect();
            for i in 0..*n {
                let j = rng.gen_range(i..*m);
                idx.swap(i, j);
            }
            let mut a = Matrix::zeros(*m, *n);
            for (j, &r) in idx[..*n].iter().enumerate() {
                a[(r, j)] = 1.0;
            }
            a
        }
        MatrixKind::Random { m, n } => gaussian(*m, *n, &mut rng),
        MatrixKind::Diagonal { values, m } => Matrix::from_diagonal(values).pad_rows(*m),
    })
}

fn parse_shape(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parse(format!("bad shape {s:?}, expected MxN or N"));
    match s.split_once('x') {
        Some((a, b)) => Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?)),
        None => {
            let n = s.parse().map_err(|_| bad())?;
            Ok((n, n))
        }
    }
}

/// Parses `kind:MxN[:key=value…]`, e.g. `hc:8192x500`, `kahan:8192x500:s=0.99`,
/// `stairs:2048x125:L=25`, `diag:1,2,3` or `diag:8:1,2,3`.
impl FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default().to_ascii_lowercase();
        let rest: Vec<&str> = parts.collect();
        if name == "diag" || name == "diagonal" {
            let (m, list) = match rest[..] {
                [list] => (None, list),
                [m, list] => (Some(m.parse::<usize>().map_err(|e| Error::Parse(format!("bad row count {m:?}: {e}")))?), list),
                _ => return Err(Error::Parse(format!("bad diagonal spec {s:?}"))),
            };
            let values: Vec<f64> = list
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad value {v:?}: {e}"))))
                .collect::<Result<_>>()?;
            let m = m.unwrap_or(values.len());
            return Ok(MatrixKind::Diagonal { values, m });
        }
        let shape = rest
            .first()
            .ok_or_else(|| Error::Parse(format!("missing shape in {s:?}")))?;
        let (m, n) = parse_shape(shape)?;
        let mut opts = std::collections::HashMap::new();
        for kv in &rest[1..] {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad option {kv:?}, expected key=value")))?;
            let v: f64 = v.parse().map_err(|e| Error::Parse(format!("bad option value {v:?}: {e}")))?;
            opts.insert(k.to_ascii_lowercase(), v);
        }
        let get = |k: &str, default: f64| opts.get(k).copied().unwrap_or(default);
        Ok(match name.as_str() {
            "kahan" => MatrixKind::Kahan { n, s: get("s", DEFAULT_KAHAN_S), pad_to_m: m },
            "stairs" | "devils-stairs" | "devils_stairs" => MatrixKind::DevilsStairs {
                m,
                n,
                q: get("q", DEFAULT_STAIRS_Q),
                stair_len: get("l", DEFAULT_STAIR_LEN as f64) as usize,
            },
            "stewart" => MatrixKind::Stewart { m, n, q: get("q", DEFAULT_STEWART_Q) },
            "hc" => MatrixKind::Hc { m, n },
            "sampled" | "sampled-identity" | "sampled_identity" => MatrixKind::SampledIdentity { m, n },
            "random" => MatrixKind::Random { m, n },
            other => return Err(Error::Parse(format!("unknown matrix kind {other:?}"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_small() {
        let k = kahan(3, 0.6);
        let expect = Matrix::from_rows(&[[1.0, -0.8, -0.8], [0.0, 0.6, -0.48], [0.0, 0.0, 0.36]]).unwrap();
        assert!(k.sub(&expect).unwrap().max_abs() < 1e-15);
        let padded = generate(&MatrixSpec::new(MatrixKind::Kahan { n: 3, s: 0.6, pad_to_m: 5 }, 0)).unwrap();
        assert_eq!(padded.shape(), (5, 3));
        assert_eq!(padded.row(4), vec![0.0; 3]);
    }

    #[test]
    fn invalid_specs() {
        let bad = [
            MatrixKind::Kahan { n: 3, s: 1.0, pad_to_m: 3 },
            MatrixKind::Kahan { n: 3, s: 0.5, pad_to_m: 2 },
            MatrixKind::DevilsStairs { m: 10, n: 5, q: 0.0, stair_len: 2 },
            MatrixKind::DevilsStairs { m: 10, n: 5, q: 0.5, stair_len: 0 },
            MatrixKind::Stewart { m: 10, n: 5, q: 1.5 },
            MatrixKind::Hc { m: 10, n: 1 },
            MatrixKind::SampledIdentity { m: 3, n: 5 },
        ];
        for kind in bad {
            assert!(generate(&MatrixSpec::new(kind.clone(), 0)).is_err(), "{kind:?}");
        }
    }

    #[test]
    fn hc_spectrum_ends() {
        let s = hc_spectrum(500);
        assert_eq!(s.len(), 500);
        assert_eq!((s[0], s[1]), (100.0, 10.0));
        assert!((s[2] - 1e-2).abs() < 1e-17);
        assert!((s[499] / 1e-14 - 1.0).abs() < 1e-12);
        assert_eq!(s.iter().filter(|&&v| v > 1e-10).count(), 334);
    }

    #[test]
    fn stairs_indexing() {
        let s = stairs_spectrum(500, 1e-3, 100);
        assert_eq!(s[99], 1.0);
        assert_eq!(s[100], 1e-3);
        assert_eq!(s.iter().filter(|&&v| v > 1e-10).count(), 400);
    }

    #[test]
    fn sampled_identity_columns_are_distinct_units() {
        let a = generate(&MatrixSpec::new(MatrixKind::SampledIdentity { m: 50, n: 20 }, 4)).unwrap();
        let gram = a.t_matmul(&a).unwrap();
        assert_eq!(gram, Matrix::identity(20));
    }

    #[test]
    fn parse_cli_forms() {
        assert_eq!("hc:8192x500".parse::<MatrixKind>().unwrap(), MatrixKind::Hc { m: 8192, n: 500 });
        assert_eq!(
            "kahan:128x32:s=0.9".parse::<MatrixKind>().unwrap(),
            MatrixKind::Kahan { n: 32, s: 0.9, pad_to_m: 128 }
        );
        assert_eq!(
            "stairs:2048x125:L=25".parse::<MatrixKind>().unwrap(),
            MatrixKind::DevilsStairs { m: 2048, n: 125, q: 1e-3, stair_len: 25 }
        );
        assert_eq!(
            "diag:4:1,2".parse::<MatrixKind>().unwrap(),
            MatrixKind::Diagonal { values: vec![1.0, 2.0], m: 4 }
        );
        assert_eq!("random:16".parse::<MatrixKind>().unwrap(), MatrixKind::Random { m: 16, n: 16 });
        assert!("nope:3x3".parse::<MatrixKind>().is_err());
        assert!("hc:axb".parse::<MatrixKind>().is_err());
        assert!("hc:8x4:q".parse::<MatrixKind>().is_err());
    }

    #[test]
    fn json_round_trip() {
        let spec = MatrixSpec::new(MatrixKind::Stewart { m: 20, n: 10, q: 0.8 }, 7);
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"kind":"stewart","m":20,"n":10,"q":0.8,"seed":7}"#);
        assert_eq!(serde_json::from_str::<MatrixSpec>(&s).unwrap(), spec);
    }

    #[test]
    fn same_seed_same_matrix() {
        let spec = MatrixSpec::new(MatrixKind::DevilsStairs { m: 30, n: 12, q: 0.1, stair_len: 4 }, 9);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = MatrixSpec { seed: 10, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }
}
