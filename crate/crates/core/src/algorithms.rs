//! Outer loops over a task suite.
//!
//! All methods share one update, `x <- x - beta * mean_{i in T_k} g_i`, and
//! differ only in how the per-task direction `g_i` is produced:
//!
//! | method           | `g_i`                                            |
//! |------------------|--------------------------------------------------|
//! | `fo-maml`        | `grad f_i(x - alpha grad f_i(x))`                |
//! | `fo-muml`        | `grad f_i(z_i)` with `z_i` from the inner solver |
//! | `exact-prox-sgd` | `grad f_i(z_i(x))`, exact prox                   |
//! | `full-gd`        | as `exact-prox-sgd` with `T_k` = all tasks       |
//!
//! Batches are drawn uniformly without replacement and then summed in
//! increasing task index, so `tau = n` gives the same floating-point sum as
//! the deterministic method.

use std::time::Instant;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::envelope::{self, accurate_spec, InnerSolverSpec};
use crate::rng::{self, streams};
use crate::tasks::TaskSuite;
use crate::{MetaError, Result, Vector};

/// Outer iterates whose norm exceeds this abort the run.
pub const OUTER_DIVERGENCE_NORM: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FoMaml,
    FoMuml,
    ExactProxSgd,
    FullGd,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::FoMaml => "fo-maml",
            Method::FoMuml => "fo-muml",
            Method::ExactProxSgd => "exact-prox-sgd",
            Method::FullGd => "full-gd",
        }
    }
}

fn default_inner() -> InnerSolverSpec {
    InnerSolverSpec::fixed_point(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterSpec {
    pub method: Method,
    pub beta: f64,
    /// Batch size; ignored by `full-gd`.
    pub tau: usize,
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    /// Used by `fo-muml` only.
    #[serde(default = "default_inner")]
    pub inner: InnerSolverSpec,
    /// Starting point, zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

impl OuterSpec {
    pub fn new(method: Method, beta: f64, tau: usize, iterations: usize, seed: u64) -> Self {
        Self { method, beta, tau, iterations, seed, inner: default_inner(), x0: None }
    }

    pub fn with_inner(mut self, inner: InnerSolverSpec) -> Self {
        self.inner = inner;
        self
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    /// Effective batch size on a suite of `n` tasks.
    pub fn batch_size(&self, n: usize) -> usize {
        match self.method {
            Method::FullGd => n,
            _ => self.tau,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(MetaError::InvalidConfig(format!("beta must be a finite value >= 0, got {}", self.beta)));
        }
        let tau = self.batch_size(n);
        if tau == 0 || tau > n {
            return Err(MetaError::InvalidConfig(format!("batch size must lie in 1..={n}, got {tau}")));
        }
        if self.method == Method::FoMuml {
            self.inner.validate()?;
        }
        Ok(())
    }

    fn start(&self, d: usize) -> Result<Vector> {
        match &self.x0 {
            None => Ok(Vector::zeros(d)),
            Some(v) if v.len() == d => Ok(Vector::from_column_slice(v)),
            Some(v) => Err(MetaError::DimensionMismatch { expected: d, got: v.len() }),
        }
    }
}

/// What to measure along a run besides the iterates themselves.
#[derive(Clone, Debug, Default)]
pub struct Monitor {
    /// Solution, enables `dist_sq`.
    pub x_star: Option<Vector>,
    /// Record `F(x^k)` and `|grad F(x^k)|^2` (one accurate prox per task per iteration).
    pub track_objective: bool,
    /// Record the mean relative error of the used directions against `grad F_i(x^k)`.
    pub measure_inner: bool,
    /// Keep `x^k` every `stride` iterations.
    pub snapshot_stride: Option<usize>,
    /// Record cumulative wall-clock time; otherwise `wall_ns` is 0.
    pub record_time: bool,
}

impl Monitor {
    /// Everything on.
    pub fn full(x_star: Option<Vector>) -> Self {
        Self { x_star, track_objective: true, measure_inner: true, snapshot_stride: None, record_time: true }
    }

    /// Distance to `x_star` only.
    pub fn distance(x_star: Vector) -> Self {
        Self { x_star: Some(x_star), ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub k: usize,
    pub dist_sq: Option<f64>,
    pub objective: Option<f64>,
    pub grad_norm_sq: Option<f64>,
    /// Mean over the batch used at iteration `k` (absent for the last record).
    pub mean_cert_err: Option<f64>,
    pub wall_ns: u64,
    pub x: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub method: Method,
    /// `iterations + 1` records, `k = 0..=iterations`.
    pub records: Vec<Record>,
    pub final_x: Vector,
}

impl Trajectory {
    pub fn dist_sq(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.dist_sq).collect()
    }

    pub fn grad_norm_sq(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.grad_norm_sq).collect()
    }
}

fn sample_batch<R: rand::Rng>(rng: &mut R, n: usize, tau: usize) -> Vec<usize> {
    if tau == n {
        return (0..n).collect();
    }
    let mut batch = index::sample(rng, n, tau).into_vec();
    batch.sort_unstable();
    batch
}

/// Runs `spec.method` on `suite` for `spec.iterations` outer steps.
pub fn run(suite: &TaskSuite, alpha: f64, spec: &OuterSpec, monitor: &Monitor) -> Result<Trajectory> {
    if !(alpha > 0.0) {
        return Err(MetaError::InvalidConstants(format!("alpha must be positive, got {alpha}")));
    }
    let n = suite.n();
    spec.validate(n)?;
    let tau = spec.batch_size(n);
    let mut x = spec.start(suite.dim())?;
    let mut rng = rng::stream(spec.seed, streams::BATCH);
    let clock = monitor.record_time.then(Instant::now);
    let mut records = Vec::with_capacity(spec.iterations + 1);

    for k in 0..=spec.iterations {
        let mut record = observe(suite, alpha, &x, k, monitor, clock)?;
        if k == spec.iterations {
            records.push(record);
            break;
        }
        let batch = sample_batch(&mut rng, n, tau);
        let mut sum = Vector::zeros(suite.dim());
        let mut err_sum = 0.0;
        for &i in &batch {
            let task = suite.task(i);
            let (g, reference) = match spec.method {
                Method::FoMaml => {
                    let z = &x - task.grad(&x)? * alpha;
                    (task.grad(&z)?, None)
                }
                Method::FoMuml => {
                    let res = envelope::inner_solve(task, &x, alpha, &spec.inner)?;
                    (res.g, res.reference_grad)
                }
                Method::ExactProxSgd | Method::FullGd => {
                    let res = envelope::inner_solve(task, &x, alpha, &accurate_spec(task))?;
                    (res.g, None)
                }
            };
            if monitor.measure_inner {
                let reference = match reference {
                    Some(r) => r,
                    None => envelope::envelope_grad(task, &x, alpha, &accurate_spec(task))?,
                };
                let denom = reference.norm();
                let err = (&g - &reference).norm();
                err_sum += if denom > 0.0 { err / denom } else { err };
            }
            sum += g;
        }
        if monitor.measure_inner {
            record.mean_cert_err = Some(err_sum / tau as f64);
        }
        records.push(record);
        x -= (sum / tau as f64) * spec.beta;
        let norm = x.norm();
        if !(norm <= OUTER_DIVERGENCE_NORM) {
            return Err(MetaError::OuterDivergence { iteration: k + 1, norm });
        }
    }
    Ok(Trajectory { method: spec.method, records, final_x: x })
}

fn observe(
    suite: &TaskSuite,
    alpha: f64,
    x: &Vector,
    k: usize,
    monitor: &Monitor,
    clock: Option<Instant>,
) -> Result<Record> {
    let (objective, grad_norm_sq) = if monitor.track_objective {
        let eval = envelope::evaluate_suite(suite, x, alpha)?;
        (Some(eval.value), Some(eval.grad.norm_squared()))
    } else {
        (None, None)
    };
    let snapshot = monitor
        .snapshot_stride
        .filter(|&s| s > 0 && k % s == 0)
        .map(|_| x.as_slice().to_vec());
    Ok(Record {
        k,
        dist_sq: monitor.x_star.as_ref().map(|s| (x - s).norm_squared()),
        objective,
        grad_norm_sq,
        mean_cert_err: None,
        wall_ns: clock.map_or(0, |c| c.elapsed().as_nanos() as u64),
        x: snapshot,
    })
}

/// FO-MAML: one explicit gradient step per sampled task.
#[allow(clippy::too_many_arguments)]
pub fn run_fo_maml(
    suite: &TaskSuite,
    x0: &Vector,
    alpha: f64,
    beta: f64,
    tau: usize,
    iterations: usize,
    seed: u64,
    monitor: &Monitor,
) -> Result<Trajectory> {
    let spec = OuterSpec::new(Method::FoMaml, beta, tau, iterations, seed).with_x0(x0.as_slice().to_vec());
    run(suite, alpha, &spec, monitor)
}

/// FO-MuML with an arbitrary inner solver.
#[allow(clippy::too_many_arguments)]
pub fn run_fo_muml(
    suite: &TaskSuite,
    x0: &Vector,
    alpha: f64,
    beta: f64,
    tau: usize,
    iterations: usize,
    inner: InnerSolverSpec,
    seed: u64,
    monitor: &Monitor,
) -> Result<Trajectory> {
    let spec = OuterSpec::new(Method::FoMuml, beta, tau, iterations, seed)
        .with_inner(inner)
        .with_x0(x0.as_slice().to_vec());
    run(suite, alpha, &spec, monitor)
}

/// SGD on `F` with exact envelope gradients.
#[allow(clippy::too_many_arguments)]
pub fn run_exact_prox_sgd(
    suite: &TaskSuite,
    x0: &Vector,
    alpha: f64,
    beta: f64,
    tau: usize,
    iterations: usize,
    seed: u64,
    monitor: &Monitor,
) -> Result<Trajectory> {
    let spec = OuterSpec::new(Method::ExactProxSgd, beta, tau, iterations, seed).with_x0(x0.as_slice().to_vec());
    run(suite, alpha, &spec, monitor)
}

/// Gradient descent on `F` with exact envelope gradients.
pub fn run_full_gd(
    suite: &TaskSuite,
    x0: &Vector,
    alpha: f64,
    beta: f64,
    iterations: usize,
    monitor: &Monitor,
) -> Result<Trajectory> {
    let spec = OuterSpec::new(Method::FullGd, beta, suite.n(), iterations, 0).with_x0(x0.as_slice().to_vec());
    run(suite, alpha, &spec, monitor)
}
