use serde::{Deserialize, Serialize};

use crate::{MetaError, Result};

/// Empirical linear rate and plateau of a nonnegative error sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Per-iteration contraction factor of the pre-plateau segment.
    pub factor: f64,
    /// Median of the last 10% of the sequence.
    pub plateau: f64,
    /// Number of points used in the log-linear fit.
    pub fitted_points: usize,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Fits `values[k] ~ C factor^k` on the leading run of points above ten times
/// the plateau.
pub fn fit_rate(values: &[f64]) -> Result<RateFit> {
    if values.is_empty() {
        return Err(MetaError::InsufficientDecay);
    }
    let tail = (values.len() / 10).max(1);
    let plateau = median(&values[values.len() - tail..]);
    let threshold = 10.0 * plateau;
    let segment: Vec<(f64, f64)> = values
        .iter()
        .take_while(|&&v| v > threshold && v > 0.0)
        .enumerate()
        .map(|(k, &v)| (k as f64, v.ln()))
        .collect();
    if segment.len() < 2 {
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if hi - lo <= 1e-12 * hi.abs().max(f64::MIN_POSITIVE) {
            return Ok(RateFit { factor: 1.0, plateau, fitted_points: 0 });
        }
        return Err(MetaError::InsufficientDecay);
    }
    let m = segment.len() as f64;
    let (sk, sy) = segment.iter().fold((0.0, 0.0), |(a, b), (k, y)| (a + k, b + y));
    let (mk, my) = (sk / m, sy / m);
    let (num, den) = segment
        .iter()
        .fold((0.0, 0.0), |(num, den), (k, y)| (num + (k - mk) * (y - my), den + (k - mk) * (k - mk)));
    Ok(RateFit { factor: (num / den).exp(), plateau, fitted_points: segment.len() })
}
