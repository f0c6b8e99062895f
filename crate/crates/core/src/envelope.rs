//! Proximal points, Moreau-envelope values and gradients, certified inexact
//! prox oracles and virtual iterates.
//!
//! For a task `f` and parameter `alpha > 0` the envelope is
//! `F(x) = min_z f(z) + |z - x|^2 / (2 alpha)` with minimizer `z(x)`, and
//! `grad F(x) = (x - z(x)) / alpha = grad f(z(x))`.

use serde::{Deserialize, Serialize};

use crate::tasks::{Convexity, TaskLoss, TaskSuite};
use crate::{Matrix, MetaError, Result, Vector};

/// Iterates whose norm exceeds this are reported as divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// How the inner (per-task) problem is solved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InnerSolverSpec {
    /// Closed-form prox (quadratic tasks only).
    ExactClosedForm,
    /// `steps` iterations of `z <- x - gamma * grad f(z)` from `z = x`;
    /// `gamma` defaults to `alpha`.
    FixedPoint {
        steps: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    /// Fixed-point iteration until the relative oracle error
    /// `|(x - z)/alpha - grad F(x)| / |grad F(x)|` is certified `<= delta`
    /// against a reference prox computed to relative accuracy `delta_ref`.
    ToDelta {
        delta: f64,
        delta_ref: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        step_cap: Option<usize>,
    },
    /// High-accuracy prox: closed form for quadratics, otherwise gradient
    /// descent on the strongly convex inner objective down to relative
    /// gradient accuracy `tol`.
    Reference { tol: f64 },
}

impl InnerSolverSpec {
    pub fn fixed_point(steps: usize) -> Self {
        InnerSolverSpec::FixedPoint { steps, gamma: None }
    }

    pub fn to_delta(delta: f64) -> Self {
        InnerSolverSpec::ToDelta { delta, delta_ref: delta / 100.0, gamma: None, step_cap: None }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InnerSolverSpec::FixedPoint { steps, gamma } => {
                if steps == 0 {
                    return Err(MetaError::InvalidConfig("fixed-point inner solver needs steps >= 1".into()));
                }
                check_gamma(gamma)
            }
            InnerSolverSpec::ToDelta { delta, delta_ref, gamma, .. } => {
                if !(delta >= 0.0) {
                    return Err(MetaError::InvalidConfig(format!("delta must be >= 0, got {delta}")));
                }
                if delta > 0.0 && !(delta_ref > 0.0 && delta_ref <= delta / 100.0) {
                    return Err(MetaError::InvalidConfig(format!(
                        "delta_ref must lie in (0, delta/100], got {delta_ref} for delta {delta}"
                    )));
                }
                check_gamma(gamma)
            }
            InnerSolverSpec::Reference { tol } => {
                if !(tol > 0.0) {
                    return Err(MetaError::InvalidConfig(format!("reference tol must be > 0, got {tol}")));
                }
                Ok(())
            }
            InnerSolverSpec::ExactClosedForm => Ok(()),
        }
    }
}

fn check_gamma(gamma: Option<f64>) -> Result<()> {
    match gamma {
        Some(g) if !(g > 0.0) => Err(MetaError::InvalidConfig(format!("gamma must be > 0, got {g}"))),
        _ => Ok(()),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(MetaError::InvalidConstants(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}

fn check_regime(task: &TaskLoss, alpha: f64) -> Result<()> {
    if task.convexity() == Convexity::Nonconvex && alpha * task.smoothness() >= 1.0 {
        return Err(MetaError::RegimeViolation(format!(
            "nonconvex task needs alpha*L < 1, got {}",
            alpha * task.smoothness()
        )));
    }
    Ok(())
}

/// Output of one inner solve.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerResult {
    /// Approximate prox point.
    pub z: Vector,
    /// Virtual iterate `z + alpha * grad f(z)`.
    pub y: Vector,
    /// `grad f(z)`, the direction handed to the outer loop.
    pub g: Vector,
    /// Measured oracle error when the solver certified one.
    pub certified_rel_err: Option<f64>,
    /// Reference `grad F(x)` if the solver computed one.
    pub reference_grad: Option<Vector>,
    /// Gradient evaluations spent in the inner loop.
    pub steps: usize,
}

impl InnerResult {
    fn from_point(task: &TaskLoss, z: Vector, alpha: f64, steps: usize) -> Result<Self> {
        let g = task.grad(&z)?;
        let y = &z + &g * alpha;
        Ok(Self { z, y, g, certified_rel_err: None, reference_grad: None, steps })
    }
}

/// Solves `(A + I/alpha) z = A c + x/alpha` for a quadratic task.
pub fn prox_exact_quadratic(task: &TaskLoss, x: &Vector, alpha: f64) -> Result<Vector> {
    check_alpha(alpha)?;
    let (a, c) = task.quadratic_parts().ok_or(MetaError::NotClosedForm)?;
    if x.len() != task.dim() {
        return Err(MetaError::DimensionMismatch { expected: task.dim(), got: x.len() });
    }
    check_regime(task, alpha)?;
    let d = task.dim();
    let system = a + Matrix::identity(d, d) / alpha;
    let rhs = a * c + x / alpha;
    let solve = |r: &Vector| -> Result<Vector> {
        if let Some(ch) = system.clone().cholesky() {
            Ok(ch.solve(r))
        } else {
            system
                .clone()
                .lu()
                .solve(r)
                .ok_or_else(|| MetaError::SingularSystem("A + I/alpha is singular".into()))
        }
    };
    let mut z = solve(&rhs)?;
    // one step of iterative refinement
    let residual = &rhs - &system * &z;
    z += solve(&residual)?;
    Ok(z)
}

/// `z_{l+1} = x - gamma * grad f(z_l)` from `z_0 = x`, `s` times.
///
/// `gamma` defaults to `alpha`. With `gamma = alpha` the result satisfies
/// `|grad f(z_s) - grad F(x)| <= (alpha L)^(s+1) |grad F(x)|`.
pub fn prox_fixed_point(task: &TaskLoss, x: &Vector, alpha: f64, s: usize, gamma: Option<f64>) -> Result<Vector> {
    check_alpha(alpha)?;
    let gamma = gamma.unwrap_or(alpha);
    check_alpha(gamma)?;
    if gamma * task.smoothness() >= 1.0 {
        log::warn!(
            "fixed-point inner loop with gamma*L = {} >= 1 need not converge",
            gamma * task.smoothness()
        );
    }
    let mut z = x.clone();
    for step in 1..=s {
        z = x - task.grad(&z)? * gamma;
        let norm = z.norm();
        if !(norm <= DIVERGENCE_NORM) {
            return Err(MetaError::Divergence { step, norm });
        }
    }
    Ok(z)
}

/// Gradient descent on `h(z) = f(z) + |z - x|^2/(2 alpha)` from `z = x`,
/// stopped once `|grad h(z)| <= tol * |(x - z)/alpha|`.
///
/// Since `h` is `(mu + 1/alpha)`-strongly convex, `|(x - z)/alpha - grad F(x)|
/// <= |grad h(z)|`, so the returned point pins `grad F(x)` to relative
/// accuracy `tol`.
fn prox_by_descent(task: &TaskLoss, x: &Vector, alpha: f64, tol: f64) -> Result<Vector> {
    const MAX_ITERS: usize = 1_000_000;
    let inv_alpha = 1.0 / alpha;
    let step = 1.0 / (task.smoothness() + inv_alpha);
    let floor = 4.0 * f64::EPSILON * (task.smoothness() + inv_alpha) * x.norm().max(1.0);
    let mut z = x.clone();
    let mut best = f64::INFINITY;
    for _ in 0..MAX_ITERS {
        let grad_h = task.grad(&z)? + (&z - x) * inv_alpha;
        let gnorm = grad_h.norm();
        let env = (x - &z).norm() * inv_alpha;
        if gnorm <= tol * env || gnorm <= floor {
            return Ok(z);
        }
        best = best.min(gnorm / env.max(f64::MIN_POSITIVE));
        z -= grad_h * step;
    }
    Err(MetaError::CertificationFailed { delta: tol, steps: MAX_ITERS, best })
}

/// High-accuracy prox used as ground truth for certificates and for
/// evaluating `F` and `grad F` on non-quadratic tasks.
pub fn reference_prox(task: &TaskLoss, x: &Vector, alpha: f64, tol: f64) -> Result<Vector> {
    check_alpha(alpha)?;
    check_regime(task, alpha)?;
    if task.quadratic_parts().is_some() {
        return prox_exact_quadratic(task, x, alpha);
    }
    prox_by_descent(task, x, alpha, tol)
}

/// Options of the certified inexact oracle beyond `delta` and `delta_ref`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ToDeltaOptions {
    /// Inner step size, `alpha` when `None`.
    pub gamma: Option<f64>,
    /// Step budget; see [`default_step_cap`].
    pub step_cap: Option<usize>,
}

/// `10 * ceil(log(1/delta) / log(1/(gamma L)))`, at least 10.
pub fn default_step_cap(delta: f64, gamma_l: f64) -> usize {
    if !(gamma_l < 1.0) {
        return 1000;
    }
    if delta >= 1.0 || gamma_l <= 0.0 {
        return 10;
    }
    let ratio = (1.0 / delta).ln() / (1.0 / gamma_l).ln();
    (10.0 * ratio.ceil()).max(10.0) as usize
}

/// Inexact prox certified by `|(x - z)/alpha - grad F(x)| <= delta |grad F(x)|`.
pub fn prox_to_delta(task: &TaskLoss, x: &Vector, alpha: f64, delta: f64, delta_ref: f64) -> Result<InnerResult> {
    prox_to_delta_with(task, x, alpha, delta, delta_ref, ToDeltaOptions::default())
}

pub fn prox_to_delta_with(
    task: &TaskLoss,
    x: &Vector,
    alpha: f64,
    delta: f64,
    delta_ref: f64,
    options: ToDeltaOptions,
) -> Result<InnerResult> {
    check_alpha(alpha)?;
    InnerSolverSpec::ToDelta { delta, delta_ref, gamma: options.gamma, step_cap: options.step_cap }.validate()?;
    if delta == 0.0 {
        let z = prox_exact_quadratic(task, x, alpha)?;
        let reference = (x - &z) / alpha;
        let mut out = InnerResult::from_point(task, z, alpha, 0)?;
        out.certified_rel_err = Some(0.0);
        out.reference_grad = Some(reference);
        return Ok(out);
    }
    let z_ref = reference_prox(task, x, alpha, delta_ref)?;
    let reference = (x - &z_ref) / alpha;
    let ref_norm = reference.norm();
    if ref_norm == 0.0 {
        let mut out = InnerResult::from_point(task, x.clone(), alpha, 0)?;
        out.certified_rel_err = Some(0.0);
        out.reference_grad = Some(reference);
        return Ok(out);
    }
    let gamma = options.gamma.unwrap_or(alpha);
    check_alpha(gamma)?;
    let cap = options
        .step_cap
        .unwrap_or_else(|| default_step_cap(delta, gamma * task.smoothness()));
    let mut z = x.clone();
    let mut best = f64::INFINITY;
    for step in 1..=cap {
        z = x - task.grad(&z)? * gamma;
        let norm = z.norm();
        if !(norm <= DIVERGENCE_NORM) {
            return Err(MetaError::Divergence { step, norm });
        }
        let err = ((x - &z) / alpha - &reference).norm() / ref_norm;
        if err <= delta {
            let mut out = InnerResult::from_point(task, z, alpha, step)?;
            out.certified_rel_err = Some(err);
            out.reference_grad = Some(reference);
            return Ok(out);
        }
        best = best.min(err);
    }
    Err(MetaError::CertificationFailed { delta, steps: cap, best })
}

/// Runs the inner solver described by `spec` at `x`.
pub fn inner_solve(task: &TaskLoss, x: &Vector, alpha: f64, spec: &InnerSolverSpec) -> Result<InnerResult> {
    check_alpha(alpha)?;
    match *spec {
        InnerSolverSpec::ExactClosedForm => {
            let z = prox_exact_quadratic(task, x, alpha)?;
            InnerResult::from_point(task, z, alpha, 0)
        }
        InnerSolverSpec::FixedPoint { steps, gamma } => {
            spec.validate()?;
            let z = prox_fixed_point(task, x, alpha, steps, gamma)?;
            InnerResult::from_point(task, z, alpha, steps)
        }
        InnerSolverSpec::ToDelta { delta, delta_ref, gamma, step_cap } => {
            prox_to_delta_with(task, x, alpha, delta, delta_ref, ToDeltaOptions { gamma, step_cap })
        }
        InnerSolverSpec::Reference { tol } => {
            spec.validate()?;
            let z = reference_prox(task, x, alpha, tol)?;
            InnerResult::from_point(task, z, alpha, 0)
        }
    }
}

/// `(x - z)/alpha` for the inner solution `z`.
pub fn envelope_grad(task: &TaskLoss, x: &Vector, alpha: f64, inner: &InnerSolverSpec) -> Result<Vector> {
    let res = inner_solve(task, x, alpha, inner)?;
    Ok((x - res.z) / alpha)
}

/// `f(z) + |z - x|^2/(2 alpha)` at the inner solution `z`.
pub fn envelope_value(task: &TaskLoss, x: &Vector, alpha: f64, inner: &InnerSolverSpec) -> Result<f64> {
    let res = inner_solve(task, x, alpha, inner)?;
    Ok(task.value(&res.z)? + (&res.z - x).norm_squared() / (2.0 * alpha))
}

/// `y = z + alpha * grad f(z)`; the exact prox of `y` is `z` and
/// `grad F(y) = grad f(z)`.
pub fn virtual_iterate(task: &TaskLoss, z: &Vector, alpha: f64) -> Result<Vector> {
    Ok(z + task.grad(z)? * alpha)
}

/// Default accuracy of reference prox evaluations.
pub const REFERENCE_TOL: f64 = 1e-13;

/// Exact (quadratic) or reference (otherwise) prox used for measurements.
pub fn accurate_spec(task: &TaskLoss) -> InnerSolverSpec {
    if task.quadratic_parts().is_some() {
        InnerSolverSpec::ExactClosedForm
    } else {
        InnerSolverSpec::Reference { tol: REFERENCE_TOL }
    }
}

/// `F(x)`, `grad F(x)` and the per-task envelope gradients over a whole suite,
/// computed with exact (quadratic) or reference prox points.
#[derive(Clone, Debug)]
pub struct SuiteEval {
    pub value: f64,
    pub grad: Vector,
    pub task_grads: Vec<Vector>,
}

pub fn evaluate_suite(suite: &TaskSuite, x: &Vector, alpha: f64) -> Result<SuiteEval> {
    let n = suite.n() as f64;
    let mut value = 0.0;
    let mut grad = Vector::zeros(suite.dim());
    let mut task_grads = Vec::with_capacity(suite.n());
    for task in suite.tasks() {
        let z = reference_prox(task, x, alpha, REFERENCE_TOL)?;
        value += task.value(&z)? + (&z - x).norm_squared() / (2.0 * alpha);
        let g = (x - &z) / alpha;
        grad += &g;
        task_grads.push(g);
    }
    Ok(SuiteEval { value: value / n, grad: grad / n, task_grads })
}
