//! Self-contained numerical checks of the inner-solver lemmas, envelope
//! identities and convergence bounds. Each returns a [`VerifyReport`].

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::config::{Checks, ExperimentConfig, Repetitions};
use super::experiment::{execute, CheckResult, CheckStatus};
use crate::algorithms::{Method, OuterSpec};
use crate::envelope::{
    envelope_grad, envelope_value, prox_fixed_point, prox_to_delta_with, reference_prox, InnerSolverSpec,
    ToDeltaOptions, REFERENCE_TOL,
};
use crate::rng::{self, streams};
use crate::tasks::{make_logistic_suite, make_quadratic_suite, Convexity, SuiteDescriptor, TaskLoss};
use crate::theory::{
    envelope_constants, fo_maml_alpha_max, inner_error_bound, mismatched_step_bound, oracle_delta_max,
    perturbed_alpha_max,
};
use crate::{Matrix, MetaError, Result, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerifyTarget {
    #[serde(rename = "lemma4")]
    Lemma4,
    #[serde(rename = "remarkA1")]
    RemarkA1,
    #[serde(rename = "thm41")]
    Thm41,
    #[serde(rename = "thm42")]
    Thm42,
    #[serde(rename = "thm54")]
    Thm54,
    #[serde(rename = "thm56")]
    Thm56,
    #[serde(rename = "envelope")]
    Envelope,
}

impl VerifyTarget {
    pub const ALL: [VerifyTarget; 7] = [
        VerifyTarget::Lemma4,
        VerifyTarget::RemarkA1,
        VerifyTarget::Thm41,
        VerifyTarget::Thm42,
        VerifyTarget::Thm54,
        VerifyTarget::Thm56,
        VerifyTarget::Envelope,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VerifyTarget::Lemma4 => "lemma4",
            VerifyTarget::RemarkA1 => "remarkA1",
            VerifyTarget::Thm41 => "thm41",
            VerifyTarget::Thm42 => "thm42",
            VerifyTarget::Thm54 => "thm54",
            VerifyTarget::Thm56 => "thm56",
            VerifyTarget::Envelope => "envelope",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }
}

/// Outcome of one sub-check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub name: String,
    pub cases: usize,
    pub violations: usize,
    /// Largest measured / allowed over the cases.
    pub max_ratio: f64,
}

impl Part {
    fn new(name: &str) -> Self {
        Self { name: name.into(), cases: 0, violations: 0, max_ratio: 0.0 }
    }

    /// Records `measured <= allowed`.
    fn record(&mut self, measured: f64, allowed: f64) {
        self.cases += 1;
        if allowed > 0.0 {
            self.max_ratio = self.max_ratio.max(measured / allowed);
        } else if measured > 0.0 {
            self.max_ratio = f64::INFINITY;
        }
        if !(measured <= allowed) {
            self.violations += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.cases > 0 && self.violations == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub target: VerifyTarget,
    pub parts: Vec<Part>,
    /// Theorem checks from experiment runs, when the target uses them.
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl VerifyReport {
    fn new(target: VerifyTarget, parts: Vec<Part>, checks: Vec<CheckResult>) -> Self {
        let passed =
            parts.iter().all(Part::passed) && checks.iter().all(|c| c.status == CheckStatus::Pass);
        Self { target, parts, checks, passed }
    }
}

pub fn verify(target: VerifyTarget) -> Result<VerifyReport> {
    match target {
        VerifyTarget::Lemma4 => verify_inner_steps(),
        VerifyTarget::RemarkA1 => verify_mismatched_steps(),
        VerifyTarget::Envelope => verify_envelope(),
        VerifyTarget::Thm41 | VerifyTarget::Thm42 | VerifyTarget::Thm54 | VerifyTarget::Thm56 => {
            let configs = bound_configs(target);
            let mut checks = Vec::new();
            for config in &configs {
                checks.extend(execute(config)?.checks);
            }
            Ok(VerifyReport::new(target, Vec::new(), checks))
        }
    }
}

fn gaussian(rng: &mut impl Rng, d: usize, scale: f64) -> Vector {
    Vector::from_fn(d, |_, _| StandardNormal.sample(rng)) * scale
}

const STEP_GRID: [usize; 6] = [0, 1, 2, 3, 4, 5];
const AL_GRID: [f64; 3] = [0.1, 0.25, 0.5];

/// `|grad f(z_s) - grad F(x)| <= (alpha L)^(s+1) |grad F(x)| + 1e-12` on 20
/// seeded quadratics in `d = 1` and `d = 5`, plus the one-dimensional case
/// where the bound is attained.
pub fn verify_inner_steps() -> Result<VerifyReport> {
    let l = 1.0;
    let mut bound = Part::new("inner-step bound");
    for d in [1usize, 5] {
        let suite = make_quadratic_suite(20, d, 0.05, l, 2.0, 41 + d as u64)?;
        let mut rng = rng::stream(17 + d as u64, streams::PROBE);
        for task in suite.tasks() {
            let x = gaussian(&mut rng, d, 2.0);
            for al in AL_GRID {
                let alpha = al / l;
                let g_ref = envelope_grad(task, &x, alpha, &InnerSolverSpec::ExactClosedForm)?;
                for s in STEP_GRID {
                    let z = prox_fixed_point(task, &x, alpha, s, None)?;
                    let err = (task.grad(&z)? - &g_ref).norm();
                    bound.record(err, inner_error_bound(alpha, l, s as u32) * g_ref.norm() + 1e-12);
                }
            }
        }
    }
    let mut tight = Part::new("one-dimensional equality");
    let task = TaskLoss::scalar_quadratic(l, 0.0)?;
    let x = Vector::from_element(1, 1.3);
    for al in AL_GRID {
        let alpha = al / l;
        let g_ref = envelope_grad(&task, &x, alpha, &InnerSolverSpec::ExactClosedForm)?;
        for s in STEP_GRID {
            let z = prox_fixed_point(&task, &x, alpha, s, None)?;
            let err = (task.grad(&z)? - &g_ref).norm();
            let predicted = inner_error_bound(alpha, l, s as u32) * g_ref.norm();
            tight.record((err - predicted).abs(), 1e-12);
        }
    }
    Ok(VerifyReport::new(VerifyTarget::Lemma4, vec![bound, tight], Vec::new()))
}

/// With inner step `gamma` in `{alpha/2, 2 alpha}`, `gamma L < 1`:
/// `|(x - z_s)/gamma - grad F(x)| <= ((gamma L)^s + |alpha - gamma| L) |grad F(x)|`,
/// and the certified oracle cannot reach `delta < |alpha - gamma| L`.
pub fn verify_mismatched_steps() -> Result<VerifyReport> {
    let l = 1.0;
    let mut bound = Part::new("mismatched-step bound");
    let mut floor = Part::new("certification below the floor fails");
    for d in [1usize, 5] {
        let suite = make_quadratic_suite(10, d, 0.05, l, 2.0, 73 + d as u64)?;
        let mut rng = rng::stream(29 + d as u64, streams::PROBE);
        for task in suite.tasks() {
            let x = gaussian(&mut rng, d, 2.0);
            for al in AL_GRID {
                let alpha = al / l;
                let g_ref = envelope_grad(task, &x, alpha, &InnerSolverSpec::ExactClosedForm)?;
                for gamma in [alpha / 2.0, 2.0 * alpha] {
                    if gamma * l >= 1.0 {
                        continue;
                    }
                    for s in STEP_GRID {
                        let z = prox_fixed_point(task, &x, alpha, s, Some(gamma))?;
                        let err = ((&x - z) / gamma - &g_ref).norm();
                        bound.record(err, mismatched_step_bound(alpha, gamma, l, s as u32) * g_ref.norm() + 1e-12);
                    }
                    let gap = (alpha - gamma).abs() * l;
                    for frac in [0.5, 0.99] {
                        let delta = frac * gap;
                        let options = ToDeltaOptions { gamma: Some(gamma), step_cap: Some(200) };
                        let failed = matches!(
                            prox_to_delta_with(task, &x, alpha, delta, delta / 100.0, options),
                            Err(MetaError::CertificationFailed { .. })
                        );
                        floor.record(if failed { 0.0 } else { 1.0 }, 0.0);
                    }
                }
            }
        }
    }
    Ok(VerifyReport::new(VerifyTarget::RemarkA1, vec![bound, floor], Vec::new()))
}

/// Symmetric matrix with eigenvalues spread over `[-l, l]`, including both ends.
fn indefinite_hessian(d: usize, l: f64, rng: &mut impl Rng) -> Matrix {
    let q = Matrix::from_fn(d, d, |_, _| StandardNormal.sample(rng)).qr().q();
    let eig = Vector::from_fn(d, |i, _| if d == 1 { -l } else { -l + 2.0 * l * i as f64 / (d - 1) as f64 });
    let a = &q * Matrix::from_diagonal(&eig) * q.transpose();
    (&a + a.transpose()) * 0.5
}

fn class_tasks(class: Convexity, count: usize, seed: u64) -> Result<Vec<TaskLoss>> {
    let d = 4;
    match class {
        Convexity::StronglyConvex => Ok(make_quadratic_suite(count, d, 0.2, 2.0, 1.5, seed)?.tasks().to_vec()),
        Convexity::Convex => Ok(make_logistic_suite(count, d, 12, 0.0, seed)?.tasks().to_vec()),
        Convexity::Nonconvex => {
            let mut rng = rng::stream(seed, streams::TASK_BASE);
            (0..count)
                .map(|_| {
                    let a = indefinite_hessian(d, 2.0, &mut rng);
                    let c = gaussian(&mut rng, d, 1.0);
                    TaskLoss::quadratic(a, c)
                })
                .collect()
        }
    }
}

/// Envelope identities and constants: `(x - z)/alpha = grad f(z)` to 1e-9,
/// central differences of `F` against `grad F` to 1e-5, and the smoothness and
/// strong-monotonicity inequalities of `grad F` on 1000 random pairs per
/// convexity class.
pub fn verify_envelope() -> Result<VerifyReport> {
    let mut identity = Part::new("two gradient formulas");
    let mut fd = Part::new("finite-difference gradient");
    let mut smooth = Part::new("envelope smoothness");
    let mut monotone = Part::new("envelope strong monotonicity");
    let alpha_for = |class: Convexity, l: f64| match class {
        Convexity::Nonconvex => 0.3 / l,
        _ => 0.7 / l,
    };
    for (ci, class) in [Convexity::StronglyConvex, Convexity::Convex, Convexity::Nonconvex].into_iter().enumerate() {
        let tasks = class_tasks(class, 5, 500 + ci as u64)?;
        let mut rng = rng::stream(900 + ci as u64, streams::PROBE);
        let d = tasks[0].dim();
        for (ti, task) in tasks.iter().enumerate() {
            let (l, mu) = (task.smoothness(), task.strong_convexity());
            let alpha = alpha_for(class, l);
            let accurate = if task.quadratic_parts().is_some() {
                InnerSolverSpec::ExactClosedForm
            } else {
                InnerSolverSpec::Reference { tol: REFERENCE_TOL }
            };
            let consts = envelope_constants(l, mu, alpha, class)?;
            let grad = |x: &Vector| envelope_grad(task, x, alpha, &accurate);

            for _ in 0..10 {
                let x = gaussian(&mut rng, d, 2.0);
                let z = reference_prox(task, &x, alpha, REFERENCE_TOL)?;
                let g1 = (&x - &z) / alpha;
                let g2 = task.grad(&z)?;
                identity.record((&g1 - &g2).norm(), 1e-9 * g1.norm().max(1.0));

                let h = 1e-5;
                let mut g_fd = Vector::zeros(d);
                for j in 0..d {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += h;
                    xm[j] -= h;
                    g_fd[j] = (envelope_value(task, &xp, alpha, &accurate)? - envelope_value(task, &xm, alpha, &accurate)?)
                        / (2.0 * h);
                }
                fd.record((&g_fd - &g1).norm(), 1e-5 * g1.norm().max(1.0));
            }

            for _ in 0..(1000 / tasks.len() + usize::from(ti < 1000 % tasks.len())) {
                let x = gaussian(&mut rng, d, 2.0);
                let y = &x + gaussian(&mut rng, d, 0.5);
                let (gx, gy) = (grad(&x)?, grad(&y)?);
                let diff = &x - &y;
                let gdiff = &gx - &gy;
                let slack = 1e-9 * (1.0 + gdiff.norm());
                smooth.record(gdiff.norm(), consts.smoothness * diff.norm() + slack);
                if class != Convexity::Nonconvex {
                    monotone.record(consts.strong_convexity * diff.norm_squared(), gdiff.dot(&diff) + slack);
                }
            }
        }
    }
    Ok(VerifyReport::new(VerifyTarget::Envelope, vec![identity, fd, smooth, monotone], Vec::new()))
}

fn config(name: &str, alpha: f64, suite: SuiteDescriptor, outer: OuterSpec, repetitions: Repetitions, checks: Checks) -> ExperimentConfig {
    ExperimentConfig { name: name.into(), alpha, output_dir: None, snapshot_stride: None, timing: false, suite, outer, repetitions, checks }
}

/// Canonical experiment configurations for each bound check, chosen inside the
/// bound's own preconditions.
pub fn bound_configs(target: VerifyTarget) -> Vec<ExperimentConfig> {
    match target {
        VerifyTarget::Thm41 => {
            let (l, mu) = (1.0, 0.25);
            vec![config(
                "thm41",
                fo_maml_alpha_max(l, mu),
                SuiteDescriptor::Quadratic { n: 8, d: 3, mu, l, spread: 1.0, seed: 4 },
                OuterSpec::new(Method::FoMaml, 1.0 / (20.0 * l), 2, 1000, 0),
                Repetitions::Count { count: 50, base_seed: 41 },
                Checks { thm41: true, thm54: true, ..Checks::default() },
            )]
        }
        VerifyTarget::Thm42 => {
            let (l, mu) = (1.0, 0.1);
            vec![config(
                "thm42",
                0.5 / l,
                SuiteDescriptor::Quadratic { n: 8, d: 3, mu, l, spread: 1.0, seed: 5 },
                OuterSpec::new(Method::FoMuml, 1.0 / (20.0 * l), 1, 1000, 0)
                    .with_inner(InnerSolverSpec::to_delta(oracle_delta_max(l, mu))),
                Repetitions::Count { count: 200, base_seed: 42 },
                Checks { thm42: true, ..Checks::default() },
            )]
        }
        VerifyTarget::Thm54 => [(1.0, 1.0, 1u64), (10.0, 1.0, 2), (100.0, 1.0, 3), (10.0, 2.0, 4), (100.0, 4.0, 5)]
            .into_iter()
            .map(|(kappa, l, seed)| {
                let n = 6;
                config(
                    &format!("thm54-kappa{kappa}-{seed}"),
                    perturbed_alpha_max(l),
                    SuiteDescriptor::Quadratic { n, d: 4, mu: l / kappa, l, spread: 1.0, seed },
                    OuterSpec::new(Method::ExactProxSgd, n as f64 / (4.0 * l), n, 2000, 0).with_x0(vec![3.0; 4]),
                    Repetitions::Count { count: 1, base_seed: seed },
                    Checks { thm54: true, ..Checks::default() },
                )
            })
            .collect(),
        VerifyTarget::Thm56 => {
            let suite = SuiteDescriptor::Logistic { n: 6, d: 4, samples_per_task: 15, reg: 0.05, seed: 6 };
            let l = suite.build().map(|s| s.smoothness()).unwrap_or(1.0);
            vec![config(
                "thm56",
                1.0 / (8.0 * l),
                suite,
                OuterSpec::new(Method::FoMaml, 1.0 / (16.0 * l), 2, 1000, 0).with_x0(vec![2.0; 4]),
                Repetitions::Count { count: 10, base_seed: 56 },
                Checks { thm56: true, ..Checks::default() },
            )]
        }
        _ => Vec::new(),
    }
}
