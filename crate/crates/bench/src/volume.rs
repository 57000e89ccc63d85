//! Volume of a sketched set of orthonormal columns.

use serde::Serialize;

use rrqr_core::geometry::log_volume;
use rrqr_core::{generate, MatrixKind, MatrixSpec, SketchKind, SketchOperator};

use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumePoint {
    pub n: usize,
    pub log_volume: f64,
    pub volume: f64,
}

/// `V(ΩM)` for `M` = `n` sampled columns of `I_m`, with one sketch `Ω`
/// (`d×m`, seeded by `seed`) shared by every `n`. `V(M) = 1` throughout.
pub fn volume_decay(m: usize, d: usize, ns: &[usize], kind: SketchKind, seed: u64) -> Result<Vec<VolumePoint>> {
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let full = generate(&MatrixSpec::new(MatrixKind::SampledIdentity { m, n: n_max }, seed))?;
    let op = SketchOperator::new(kind, d, m, seed)?;
    let sk = op.apply(&full)?;
    ns.iter()
        .map(|&n| {
            let cols: Vec<usize> = (0..n).collect();
            let lv = log_volume(&sk.select_columns(&cols))?;
            Ok(VolumePoint { n, log_volume: lv, volume: lv.exp() })
        })
        .collect()
}

/// Least-squares slope of `y` against `x`.
pub fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        assert!((fitted_slope(&x, &y) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn identity_sketch_keeps_unit_volume() {
        let pts = volume_decay(64, 64, &[4, 8], SketchKind::Identity, 1).unwrap();
        for p in pts {
            assert!(p.log_volume.abs() < 1e-12);
        }
    }

    #[test]
    fn volume_shrinks_under_compression() {
        let pts = volume_decay(1024, 128, &[8, 32, 64], SketchKind::Gaussian, 2).unwrap();
        assert!(pts.windows(2).all(|w| w[1].log_volume < w[0].log_volume));
    }
}
