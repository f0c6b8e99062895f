//! One-dimensional landscapes of the implicit-MAML objective
//! `phi(x) = f(z(x))` with `z(x) = x - alpha f'(z(x))`.
//!
//! Two convex, smooth functions are provided:
//!
//! * [`PiecewiseQuartic`]: `x^4/4 - |x|^3/3 + x^2/6` on `|x| <= 1`,
//!   `2x^2/3 - |x| + 5/12` outside. `phi` is nonconvex at the witness point
//!   `x0 = 0.4 + alpha f'(0.4)` once `alpha` is large enough.
//! * [`QuadraticCosine`]: `x^2/2 + cos x`. `phi''` is unbounded for every
//!   `alpha > 0`.
//!
//! Curvatures are computed by the chain rule
//! `phi'' = f''(z) z'^2 - alpha f'(z) f'''(z) z'^3`, `z' = 1/(1 + alpha f''(z))`,
//! and independently by central second differences of `phi`.

use serde::{Deserialize, Serialize};

use crate::{MetaError, Result};

/// A scalar function with three derivatives.
pub trait ScalarFunction {
    fn name(&self) -> &str;
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
    fn d3(&self, x: f64) -> f64;
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PiecewiseQuartic;

impl PiecewiseQuartic {
    /// `f'''` from both sides of the kink at `|x| = 1`: `(inside, outside)`.
    pub fn d3_one_sided(&self, x: f64) -> (f64, f64) {
        (6.0 * x - 2.0 * sign(x), 0.0)
    }
}

impl ScalarFunction for PiecewiseQuartic {
    fn name(&self) -> &str {
        "piecewise-quartic"
    }

    fn value(&self, x: f64) -> f64 {
        let a = x.abs();
        if a <= 1.0 {
            0.25 * x.powi(4) - a.powi(3) / 3.0 + x * x / 6.0
        } else {
            2.0 / 3.0 * x * x - a + 5.0 / 12.0
        }
    }

    fn d1(&self, x: f64) -> f64 {
        if x.abs() <= 1.0 {
            x.powi(3) - sign(x) * x * x + x / 3.0
        } else {
            4.0 / 3.0 * x - sign(x)
        }
    }

    fn d2(&self, x: f64) -> f64 {
        let a = x.abs();
        if a <= 1.0 {
            3.0 * x * x - 2.0 * a + 1.0 / 3.0
        } else {
            4.0 / 3.0
        }
    }

    fn d3(&self, x: f64) -> f64 {
        if x.abs() <= 1.0 {
            6.0 * x - 2.0 * sign(x)
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct QuadraticCosine;

impl ScalarFunction for QuadraticCosine {
    fn name(&self) -> &str {
        "quadratic-cosine"
    }

    fn value(&self, x: f64) -> f64 {
        0.5 * x * x + x.cos()
    }

    fn d1(&self, x: f64) -> f64 {
        x - x.sin()
    }

    fn d2(&self, x: f64) -> f64 {
        1.0 - x.cos()
    }

    fn d3(&self, x: f64) -> f64 {
        x.sin()
    }
}

/// A user-supplied function given by its value and derivative oracles.
#[derive(Clone, Copy)]
pub struct UserFunction {
    pub name: &'static str,
    pub value: fn(f64) -> f64,
    pub d1: fn(f64) -> f64,
    pub d2: fn(f64) -> f64,
    pub d3: fn(f64) -> f64,
}

impl ScalarFunction for UserFunction {
    fn name(&self) -> &str {
        self.name
    }
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }
    fn d1(&self, x: f64) -> f64 {
        (self.d1)(x)
    }
    fn d2(&self, x: f64) -> f64 {
        (self.d2)(x)
    }
    fn d3(&self, x: f64) -> f64 {
        (self.d3)(x)
    }
}

/// Finite-difference step for second differences of `phi`.
pub const FD_STEP: f64 = 1e-4;

/// Solves `z + alpha f'(z) = x` by Newton's method safeguarded with bisection.
///
/// For convex `f` the left side is strictly increasing with slope at least 1,
/// so the root lies in `[x - |alpha f'(x)|, x + |alpha f'(x)|]`.
pub fn imaml_inner_solve(f: &dyn ScalarFunction, x: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(MetaError::InvalidConstants(format!("alpha must be positive, got {alpha}")));
    }
    let g = |z: f64| z + alpha * f.d1(z) - x;
    let tol = 1e-12 * x.abs().max(1.0);
    let g0 = g(x);
    if g0 == 0.0 {
        return Ok(x);
    }
    let mut width = g0.abs().max(f64::EPSILON * x.abs().max(1.0));
    let (mut lo, mut hi) = (x - width, x + width);
    let mut expansions = 0;
    while !(g(lo) <= 0.0 && g(hi) >= 0.0) {
        expansions += 1;
        if expansions > 60 || !width.is_finite() {
            return Err(MetaError::BracketFailure(x));
        }
        width *= 2.0;
        lo = x - width;
        hi = x + width;
    }
    let mut z = x - g0 / (1.0 + alpha * f.d2(x));
    if !(z > lo && z < hi) {
        z = 0.5 * (lo + hi);
    }
    let mut converged = false;
    for _ in 0..200 {
        let gz = g(z);
        if gz.abs() <= tol {
            converged = true;
            break;
        }
        if gz < 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        let slope = 1.0 + alpha * f.d2(z);
        let newton = z - gz / slope;
        z = if slope > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    if !converged {
        return Err(MetaError::BracketFailure(x));
    }
    // polish to round-off; keep a step only if it does not increase the residual
    for _ in 0..3 {
        let gz = g(z);
        let cand = z - gz / (1.0 + alpha * f.d2(z));
        if g(cand).abs() < gz.abs() {
            z = cand;
        } else {
            break;
        }
    }
    Ok(z)
}

/// `phi(x) = f(z(x))`.
pub fn phi(f: &dyn ScalarFunction, x: f64, alpha: f64) -> Result<f64> {
    Ok(f.value(imaml_inner_solve(f, x, alpha)?))
}

/// `phi'(x) = f'(z) / (1 + alpha f''(z))`.
pub fn phi_prime(f: &dyn ScalarFunction, x: f64, alpha: f64) -> Result<f64> {
    let z = imaml_inner_solve(f, x, alpha)?;
    Ok(f.d1(z) / (1.0 + alpha * f.d2(z)))
}

/// Chain-rule curvature of `phi` in terms of the inner solution `z`.
pub fn curvature_at_inner(f1: f64, f2: f64, f3: f64, alpha: f64) -> f64 {
    let dz = 1.0 / (1.0 + alpha * f2);
    f2 * dz * dz - alpha * f1 * f3 * dz * dz * dz
}

/// `phi''(x)` by the chain rule.
pub fn phi_second(f: &dyn ScalarFunction, x: f64, alpha: f64) -> Result<f64> {
    let z = imaml_inner_solve(f, x, alpha)?;
    Ok(curvature_at_inner(f.d1(z), f.d2(z), f.d3(z), alpha))
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Central second difference of `phi` with step `h`, with the three values
/// accumulated in double-double arithmetic.
pub fn phi_second_fd(f: &dyn ScalarFunction, x: f64, alpha: f64, h: f64) -> Result<f64> {
    let plus = phi(f, x + h, alpha)?;
    let mid = phi(f, x, alpha)?;
    let minus = phi(f, x - h, alpha)?;
    let (s1, e1) = two_sum(plus, minus);
    let (s2, e2) = two_sum(s1, -2.0 * mid);
    Ok((s2 + (e1 + e2)) / (h * h))
}

/// Curvature of the piecewise-quartic landscape, with both one-sided values
/// when `z(x)` sits exactly on the kink `|z| = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinkedCurvature {
    /// Value using the `|z| <= 1` branch.
    pub value: f64,
    /// `(inside, outside)` when `|z(x)| = 1`.
    pub one_sided: Option<(f64, f64)>,
}

pub fn phi_second_piecewise(alpha: f64, x: f64) -> Result<KinkedCurvature> {
    let f = PiecewiseQuartic;
    let z = imaml_inner_solve(&f, x, alpha)?;
    let value = curvature_at_inner(f.d1(z), f.d2(z), f.d3(z), alpha);
    let one_sided = (z.abs() == 1.0).then(|| {
        let (inside, outside) = f.d3_one_sided(z);
        (
            curvature_at_inner(f.d1(z), f.d2(z), inside, alpha),
            curvature_at_inner(f.d1(z), f.d2(z), outside, alpha),
        )
    });
    Ok(KinkedCurvature { value, one_sided })
}

/// Inner solution at the nonconvexity witness.
pub const WITNESS_Z: f64 = 0.4;

/// `x0 = 0.4 + alpha f'(0.4)`, so that `z(x0) = 0.4`.
pub fn witness_point(alpha: f64) -> f64 {
    WITNESS_Z + alpha * PiecewiseQuartic.d1(WITNESS_Z)
}

/// Chain-rule `phi''(x0)` in closed form. At `z = 0.4`: `f' = 14/375`,
/// `f'' = 1/75`, `f''' = 2/5`, so with `z' = 1/(1 + alpha/75)`
/// `phi''(x0) = z'^2/75 - alpha (28/1875) z'^3`.
pub fn witness_curvature(alpha: f64) -> f64 {
    let dz = 1.0 / (1.0 + alpha / 75.0);
    dz * dz / 75.0 - alpha * 28.0 / 1875.0 * dz.powi(3)
}

/// `alpha` at which [`witness_curvature`] changes sign: `75/83`.
pub const WITNESS_THRESHOLD: f64 = 75.0 / 83.0;

/// The expression `-2 alpha / (5 (1 + alpha/75)^3) + 1/(75 (1 + alpha/75)^2)`
/// that circulates for `phi''(x0)`. It omits the `f'(z) = 14/375` factor of
/// the `z''` term and therefore disagrees with finite differences; kept for
/// comparison in reports.
pub fn published_witness_curvature(alpha: f64) -> f64 {
    let s = 1.0 + alpha / 75.0;
    -2.0 * alpha / (5.0 * s.powi(3)) + 1.0 / (75.0 * s * s)
}

/// Sign change of [`published_witness_curvature`]: `75/2249`.
pub const PUBLISHED_THRESHOLD: f64 = 75.0 / 2249.0;

/// Closed-form `phi''` for [`QuadraticCosine`] in terms of `z = z(x)`:
/// `(1 + 2a - a z sin z - (1 + 2a) cos z) / (1 + a - a cos z)^3`.
pub fn phi_second_cosine(alpha: f64, z: f64) -> f64 {
    let num = 1.0 + 2.0 * alpha - alpha * z * z.sin() - (1.0 + 2.0 * alpha) * z.cos();
    num / (1.0 + alpha - alpha * z.cos()).powi(3)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Nonconvex,
    NotCertified,
}

/// Curvature threshold below which `phi''(x0)` counts as negative.
pub const NEGATIVE_CURVATURE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonconvexityReport {
    pub alpha: f64,
    pub witness_x: f64,
    pub witness_z: f64,
    pub phi_at_witness: f64,
    pub phi_prime_at_witness: f64,
    /// Chain-rule value.
    pub phi_second_closed: f64,
    pub phi_second_fd: f64,
    /// The circulating expression without the `f'(z)` factor.
    pub phi_second_published: f64,
    pub verdict: Verdict,
    /// Sign change of the chain-rule value.
    pub threshold_alpha: f64,
    /// Sign change of the published expression.
    pub published_threshold_alpha: f64,
}

/// Checks the sign of `phi''` at the witness point `x0`.
///
/// The verdict is `Nonconvex` iff the chain-rule value and the finite
/// difference are both below `-1e-10`.
pub fn verify_nonconvexity(alpha: f64) -> Result<NonconvexityReport> {
    let f = PiecewiseQuartic;
    let x0 = witness_point(alpha);
    let z0 = imaml_inner_solve(&f, x0, alpha)?;
    let closed = curvature_at_inner(f.d1(z0), f.d2(z0), f.d3(z0), alpha);
    let fd = phi_second_fd(&f, x0, alpha, FD_STEP)?;
    let verdict = if closed < -NEGATIVE_CURVATURE_TOL && fd < -NEGATIVE_CURVATURE_TOL {
        Verdict::Nonconvex
    } else {
        Verdict::NotCertified
    };
    Ok(NonconvexityReport {
        alpha,
        witness_x: x0,
        witness_z: z0,
        phi_at_witness: f.value(z0),
        phi_prime_at_witness: f.d1(z0) / (1.0 + alpha * f.d2(z0)),
        phi_second_closed: closed,
        phi_second_fd: fd,
        phi_second_published: published_witness_curvature(alpha),
        verdict,
        threshold_alpha: WITNESS_THRESHOLD,
        published_threshold_alpha: PUBLISHED_THRESHOLD,
    })
}

/// Bisection for a sign change of `g` on `[lo, hi]`.
pub fn bisect_sign_change(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let (glo, ghi) = (g(lo), g(hi));
    if glo.signum() == ghi.signum() {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if g(mid).signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// One row of a landscape table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeRow {
    pub x: f64,
    pub z: f64,
    pub phi: f64,
    pub phi_second_closed: f64,
    pub phi_second_fd: f64,
}

/// Landscape sampled at the points `x = z + alpha f'(z)` for each `z` in `z_grid`.
pub fn landscape(f: &dyn ScalarFunction, alpha: f64, z_grid: &[f64]) -> Result<Vec<LandscapeRow>> {
    z_grid
        .iter()
        .map(|&target| {
            let x = target + alpha * f.d1(target);
            let z = imaml_inner_solve(f, x, alpha)?;
            Ok(LandscapeRow {
                x,
                z,
                phi: f.value(z),
                phi_second_closed: curvature_at_inner(f.d1(z), f.d2(z), f.d3(z), alpha),
                phi_second_fd: phi_second_fd(f, x, alpha, FD_STEP)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonsmoothnessReport {
    pub alpha: f64,
    /// `phi_second_closed` uses the closed cosine formula at the target `z`.
    pub rows: Vec<LandscapeRow>,
    pub max_abs_phi_second: f64,
    /// `max |phi''|` over the first `m` targets, `m = 1..`.
    pub running_max: Vec<f64>,
}

/// Evaluates `phi''` of the quadratic-cosine landscape at
/// `x = (1 + alpha) z - alpha sin z` for each target `z`.
pub fn verify_nonsmoothness(alpha: f64, z_targets: &[f64]) -> Result<NonsmoothnessReport> {
    let f = QuadraticCosine;
    let rows = z_targets
        .iter()
        .map(|&target| {
            let x = (1.0 + alpha) * target - alpha * target.sin();
            let z = imaml_inner_solve(&f, x, alpha)?;
            Ok(LandscapeRow {
                x,
                z,
                phi: f.value(z),
                phi_second_closed: phi_second_cosine(alpha, target),
                phi_second_fd: phi_second_fd(&f, x, alpha, FD_STEP)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let running_max: Vec<f64> = rows
        .iter()
        .scan(0.0f64, |m, r| {
            *m = m.max(r.phi_second_closed.abs());
            Some(*m)
        })
        .collect();
    Ok(NonsmoothnessReport {
        alpha,
        max_abs_phi_second: running_max.last().copied().unwrap_or(0.0),
        rows,
        running_max,
    })
}

/// `z_m = (2m + 1/2) pi` for `m = 1..=count`, where `sin z = 1` and `cos z = 0`.
pub fn peak_targets(count: usize) -> Vec<f64> {
    (1..=count).map(|m| (2.0 * m as f64 + 0.5) * std::f64::consts::PI).collect()
}
