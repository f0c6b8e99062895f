use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::fit::{fit_rate, RateFit};
use super::ground_truth::{estimate_variance_bound, ground_truth, GroundTruth};
use super::{git_revision, SCHEMA_VERSION};
use crate::algorithms::{self, Method, Monitor, OuterSpec, Trajectory};
use crate::envelope::{evaluate_suite, InnerSolverSpec};
use crate::tasks::TaskSuite;
use crate::theory::{nonconvex_stationarity_bound, BoundId, TheoryInputs, TheoryReport};
use crate::{MetaError, Result, Vector};

/// Column order of per-run CSV files.
pub const RUN_COLUMNS: [&str; 7] = ["run_id", "k", "dist_sq", "F_val", "grad_norm_sq", "mean_cert_err", "wall_ns"];

/// Oracle accuracy `delta` implied by a method and its inner solver, in the
/// `|(x - z)/alpha - grad F(x)| <= delta |grad F(x)|` sense.
pub fn oracle_accuracy(spec: &OuterSpec, alpha: f64, l: f64) -> f64 {
    match spec.method {
        Method::FoMaml => alpha * l,
        Method::ExactProxSgd | Method::FullGd => 0.0,
        Method::FoMuml => match spec.inner {
            InnerSolverSpec::ExactClosedForm | InnerSolverSpec::Reference { .. } => 0.0,
            InnerSolverSpec::ToDelta { delta, .. } => delta,
            InnerSolverSpec::FixedPoint { steps, gamma } => {
                let gamma = gamma.unwrap_or(alpha);
                if gamma == alpha {
                    (alpha * l).powi(steps as i32)
                } else {
                    let ratio = gamma / alpha;
                    ratio * ((gamma * l).powi(steps as i32) + (alpha - gamma).abs() * l) + (ratio - 1.0).abs()
                }
            }
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The bound's preconditions do not hold for this config; nothing was compared.
    PreconditionUnsatisfied,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub k: usize,
    pub mean: f64,
    pub se: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub bound: BoundId,
    pub status: CheckStatus,
    pub checked_points: usize,
    /// Largest `mean / (bound + 3 SE)` over the checked points.
    pub max_ratio: f64,
    pub violations: Vec<Violation>,
}

/// Across-repetition statistics at one iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub k: usize,
    pub runs: usize,
    pub mean_dist_sq: f64,
    pub se_dist_sq: f64,
    pub mean_f_val: f64,
    pub mean_grad_norm_sq: f64,
    pub se_grad_norm_sq: f64,
    pub mean_cert_err: Option<f64>,
    /// Bound values for the enabled checks, in [`BoundId::ALL`] order.
    pub bounds: Vec<(BoundId, f64)>,
}

/// Everything an experiment computes, before anything is written.
#[derive(Clone, Debug)]
pub struct Execution {
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub ground_truth: GroundTruth,
    pub theory: TheoryReport,
    pub trajectories: Vec<Trajectory>,
    pub summary: Vec<SummaryRow>,
    pub checks: Vec<CheckResult>,
    /// Fit of the mean squared distance; `None` when no decay is visible.
    pub fit: Option<RateFit>,
}

impl Execution {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }
}

fn mean_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn run_all(suite: &TaskSuite, config: &ExperimentConfig, seeds: &[u64], monitor: &Monitor) -> Result<Vec<Trajectory>> {
    let one = |&seed: &u64| {
        let spec = OuterSpec { seed, ..config.outer.clone() };
        algorithms::run(suite, config.alpha, &spec, monitor)
    };
    #[cfg(feature = "parallel")]
    let out = seeds.par_iter().map(one).collect();
    #[cfg(not(feature = "parallel"))]
    let out = seeds.iter().map(one).collect();
    out
}

fn check_linear(bound: BoundId, theory: &TheoryReport, summary: &[SummaryRow], d0: f64) -> CheckResult {
    let Some(rate) = theory.rate(bound).filter(|r| r.precondition_satisfied) else {
        return CheckResult {
            bound,
            status: CheckStatus::PreconditionUnsatisfied,
            checked_points: 0,
            max_ratio: 0.0,
            violations: Vec::new(),
        };
    };
    let mut violations = Vec::new();
    let mut max_ratio = 0.0f64;
    for row in summary {
        let limit = rate.at(row.k, d0) + 3.0 * row.se_dist_sq;
        max_ratio = max_ratio.max(row.mean_dist_sq / limit);
        if row.mean_dist_sq > limit * (1.0 + 1e-12) {
            violations.push(Violation { k: row.k, mean: row.mean_dist_sq, se: row.se_dist_sq, bound: rate.at(row.k, d0) });
        }
    }
    CheckResult {
        bound,
        status: if violations.is_empty() { CheckStatus::Pass } else { CheckStatus::Fail },
        checked_points: summary.len(),
        max_ratio,
        violations,
    }
}

fn stationarity_value(theory: &TheoryReport, k: usize) -> Option<(bool, f64)> {
    let i = &theory.inputs;
    let b = nonconvex_stationarity_bound(i.l, i.alpha, i.beta, i.tau, i.delta, i.sigma_sq?, i.initial_gap?, k);
    Some((b.precondition_satisfied, b.value))
}

fn check_stationarity(theory: &TheoryReport, summary: &[SummaryRow]) -> CheckResult {
    let bound = BoundId::Nonconvex;
    let ready = stationarity_value(theory, 1).is_some_and(|(ok, _)| ok);
    if !ready {
        return CheckResult {
            bound,
            status: CheckStatus::PreconditionUnsatisfied,
            checked_points: 0,
            max_ratio: 0.0,
            violations: Vec::new(),
        };
    }
    let mut violations = Vec::new();
    let mut max_ratio = 0.0f64;
    let mut best: Option<&SummaryRow> = None;
    let mut checked = 0;
    for row in summary {
        if best.is_none_or(|b| row.mean_grad_norm_sq < b.mean_grad_norm_sq) {
            best = Some(row);
        }
        if row.k == 0 {
            continue;
        }
        let b = best.expect("set above");
        let (_, value) = stationarity_value(theory, row.k).expect("inputs present");
        let limit = value + 3.0 * b.se_grad_norm_sq;
        max_ratio = max_ratio.max(b.mean_grad_norm_sq / limit);
        checked += 1;
        if b.mean_grad_norm_sq > limit * (1.0 + 1e-12) {
            violations.push(Violation { k: row.k, mean: b.mean_grad_norm_sq, se: b.se_grad_norm_sq, bound: value });
        }
    }
    CheckResult {
        bound,
        status: if violations.is_empty() { CheckStatus::Pass } else { CheckStatus::Fail },
        checked_points: checked,
        max_ratio,
        violations,
    }
}

/// Runs every repetition of `config` in memory and evaluates the enabled checks.
pub fn execute(config: &ExperimentConfig) -> Result<Execution> {
    config.validate()?;
    let suite = config.suite.build()?;
    let alpha = config.alpha;
    let truth = ground_truth(&suite, alpha)?;
    let x_star = truth.x_star();
    let x0 = match &config.outer.x0 {
        Some(v) => Vector::from_column_slice(v),
        None => Vector::zeros(suite.dim()),
    };
    let d0 = (&x0 - &x_star).norm_squared();

    let l = suite.smoothness();
    let checks_on = config.checks.enabled();
    let sigma_sq = if checks_on.contains(&BoundId::Nonconvex) {
        Some(estimate_variance_bound(&suite, alpha, &x0, &x_star, config.suite.seed().unwrap_or(0))?)
    } else {
        None
    };
    let initial_gap = evaluate_suite(&suite, &x0, alpha)?.value - truth.f_star;
    let theory = TheoryReport::new(TheoryInputs {
        l,
        mu: suite.strong_convexity(),
        alpha,
        beta: config.outer.beta,
        tau: config.outer.batch_size(suite.n()),
        class: suite.convexity(),
        delta: oracle_accuracy(&config.outer, alpha, l),
        sigma_star_sq: truth.sigma_star_sq,
        sigma_sq,
        initial_gap: Some(initial_gap.max(0.0)),
    });

    let monitor = Monitor {
        x_star: Some(x_star.clone()),
        track_objective: true,
        measure_inner: true,
        snapshot_stride: config.snapshot_stride,
        record_time: config.timing,
    };
    let seeds = config.seeds();
    let trajectories = run_all(&suite, config, &seeds, &monitor)?;

    let mut summary = summarize(&trajectories);
    for row in &mut summary {
        for &id in &checks_on {
            let value = match id {
                BoundId::Nonconvex => stationarity_value(&theory, row.k).map(|(_, v)| v),
                _ => theory.rate(id).map(|r| r.at(row.k, d0)),
            };
            if let Some(v) = value {
                row.bounds.push((id, v));
            }
        }
    }
    let checks = checks_on
        .iter()
        .map(|&id| match id {
            BoundId::Nonconvex => check_stationarity(&theory, &summary),
            _ => check_linear(id, &theory, &summary, d0),
        })
        .collect();
    let fit = fit_rate(&summary.iter().map(|r| r.mean_dist_sq).collect::<Vec<_>>()).ok();
    Ok(Execution { config: config.clone(), seeds, ground_truth: truth, theory, trajectories, summary, checks, fit })
}

fn summarize(trajectories: &[Trajectory]) -> Vec<SummaryRow> {
    let len = trajectories[0].records.len();
    (0..len)
        .map(|k| {
            let recs = trajectories.iter().map(move |t| &t.records[k]);
            let (mean_dist_sq, se_dist_sq) = mean_se(recs.clone().map(|r| r.dist_sq.unwrap_or(f64::NAN)));
            let (mean_grad_norm_sq, se_grad_norm_sq) = mean_se(recs.clone().map(|r| r.grad_norm_sq.unwrap_or(f64::NAN)));
            let (mean_f_val, _) = mean_se(recs.clone().map(|r| r.objective.unwrap_or(f64::NAN)));
            let certs: Option<Vec<f64>> = recs.clone().map(|r| r.mean_cert_err).collect();
            SummaryRow {
                k,
                runs: trajectories.len(),
                mean_dist_sq,
                se_dist_sq,
                mean_f_val,
                mean_grad_norm_sq,
                se_grad_norm_sq,
                mean_cert_err: certs.map(|c| c.iter().sum::<f64>() / c.len() as f64),
                bounds: Vec::new(),
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-run CSV in the [`RUN_COLUMNS`] layout.
pub fn run_csv(run_id: usize, trajectory: &Trajectory) -> String {
    let mut out = RUN_COLUMNS.join(",");
    out.push('\n');
    for r in &trajectory.records {
        let _ = writeln!(
            out,
            "{run_id},{},{},{},{},{},{}",
            r.k,
            opt(r.dist_sq),
            opt(r.objective),
            opt(r.grad_norm_sq),
            opt(r.mean_cert_err),
            r.wall_ns
        );
    }
    out
}

fn snapshot_csv(trajectory: &Trajectory) -> Option<String> {
    let first = trajectory.records.iter().find_map(|r| r.x.as_ref())?;
    let mut out = String::from("k");
    for j in 0..first.len() {
        let _ = write!(out, ",x{j}");
    }
    out.push('\n');
    for r in &trajectory.records {
        if let Some(x) = &r.x {
            out.push_str(&r.k.to_string());
            for v in x {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    Some(out)
}

/// Across-run summary CSV; one `bound_<id>` column per enabled check.
pub fn summary_csv(summary: &[SummaryRow]) -> String {
    let mut out = String::from("k,runs,mean_dist_sq,se_dist_sq,mean_F_val,mean_grad_norm_sq,se_grad_norm_sq,mean_cert_err");
    if let Some(first) = summary.first() {
        for (id, _) in &first.bounds {
            let _ = write!(out, ",bound_{}", id.name());
        }
    }
    out.push('\n');
    for r in summary {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.k,
            r.runs,
            r.mean_dist_sq,
            r.se_dist_sq,
            r.mean_f_val,
            r.mean_grad_norm_sq,
            r.se_grad_norm_sq,
            opt(r.mean_cert_err)
        );
        for (_, v) in &r.bounds {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// JSON sidecar written next to the CSV files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub schema: String,
    pub name: String,
    pub config_hash: String,
    pub git_revision: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub theory: TheoryReport,
    pub ground_truth: GroundTruth,
    pub checks: Vec<CheckResult>,
    pub fit: Option<RateFit>,
    pub run_files: Vec<String>,
    pub summary_file: String,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub execution: Execution,
    pub metadata: Metadata,
}

impl ExperimentOutcome {
    pub fn passed(&self) -> bool {
        self.execution.passed()
    }
}

/// Directory of an experiment under `root`.
pub fn experiment_dir(config: &ExperimentConfig, root: &Path) -> PathBuf {
    match &config.output_dir {
        Some(dir) => root.join(dir),
        None => root.join(&config.name),
    }
}

/// Writes the files of an already computed execution into `dir`.
pub fn write_execution(execution: &Execution, dir: &Path) -> Result<Metadata> {
    fs::create_dir_all(dir)?;
    let mut run_files = Vec::with_capacity(execution.trajectories.len());
    for (id, t) in execution.trajectories.iter().enumerate() {
        let file = format!("run_{id:04}.csv");
        fs::write(dir.join(&file), run_csv(id, t))?;
        if let Some(snap) = snapshot_csv(t) {
            fs::write(dir.join(format!("run_{id:04}_snapshots.csv")), snap)?;
        }
        run_files.push(file);
    }
    let summary_file = "summary.csv".to_string();
    fs::write(dir.join(&summary_file), summary_csv(&execution.summary))?;
    let metadata = Metadata {
        schema: SCHEMA_VERSION.into(),
        name: execution.config.name.clone(),
        config_hash: execution.config.hash(),
        git_revision: git_revision(),
        config: execution.config.clone(),
        seeds: execution.seeds.clone(),
        theory: execution.theory.clone(),
        ground_truth: execution.ground_truth.clone(),
        checks: execution.checks.clone(),
        fit: execution.fit,
        run_files,
        summary_file,
        passed: execution.passed(),
    };
    fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&metadata)?)?;
    Ok(metadata)
}

/// Runs `config` and writes per-run CSVs, `summary.csv` and `metadata.json`
/// under `root`.
pub fn run_experiment(config: &ExperimentConfig, root: &Path) -> Result<ExperimentOutcome> {
    let execution = execute(config)?;
    let dir = experiment_dir(config, root);
    let metadata = write_execution(&execution, &dir)?;
    Ok(ExperimentOutcome { dir, execution, metadata })
}

/// Parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    Alpha,
    Beta,
    Tau,
    Iterations,
    /// Fixed-point inner steps.
    Steps,
    /// Certified oracle accuracy.
    Delta,
}

impl SweepParam {
    pub const ALL: [SweepParam; 6] =
        [SweepParam::Alpha, SweepParam::Beta, SweepParam::Tau, SweepParam::Iterations, SweepParam::Steps, SweepParam::Delta];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
            SweepParam::Tau => "tau",
            SweepParam::Iterations => "iterations",
            SweepParam::Steps => "steps",
            SweepParam::Delta => "delta",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    fn as_count(self, value: f64) -> Result<usize> {
        if value >= 0.0 && value.fract() == 0.0 && value <= usize::MAX as f64 {
            Ok(value as usize)
        } else {
            Err(MetaError::InvalidConfig(format!("{} needs a nonnegative integer, got {value}", self.name())))
        }
    }

    /// `config` with this parameter set to `value`.
    pub fn apply(self, config: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut c = config.clone();
        match self {
            SweepParam::Alpha => c.alpha = value,
            SweepParam::Beta => c.outer.beta = value,
            SweepParam::Tau => c.outer.tau = self.as_count(value)?,
            SweepParam::Iterations => c.outer.iterations = self.as_count(value)?,
            SweepParam::Steps => {
                let gamma = match c.outer.inner {
                    InnerSolverSpec::FixedPoint { gamma, .. } => gamma,
                    _ => None,
                };
                c.outer.inner = InnerSolverSpec::FixedPoint { steps: self.as_count(value)?, gamma };
            }
            SweepParam::Delta => c.outer.inner = InnerSolverSpec::to_delta(value),
        }
        c.validate()?;
        Ok(c)
    }
}

/// One sweep point, as written to `sweep.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub final_mean_dist_sq: f64,
    pub plateau_dist_sq: Option<f64>,
    pub fitted_factor: Option<f64>,
    /// `|x_inf - x*|` for the full-batch FO-MAML fixed point, when it exists.
    pub fixed_point_dist: Option<f64>,
    pub passed: bool,
    pub dir: String,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub dir: PathBuf,
    pub param: SweepParam,
    pub points: Vec<SweepPoint>,
}

impl SweepOutcome {
    pub fn passed(&self) -> bool {
        self.points.iter().all(|p| p.passed)
    }
}

pub fn sweep_csv(param: SweepParam, points: &[SweepPoint]) -> String {
    let mut out = String::from("param,value,final_mean_dist_sq,plateau_dist_sq,fitted_factor,fixed_point_dist,passed,dir\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            param.name(),
            p.value,
            p.final_mean_dist_sq,
            opt(p.plateau_dist_sq),
            opt(p.fitted_factor),
            opt(p.fixed_point_dist),
            p.passed,
            p.dir
        );
    }
    out
}

/// Runs `config` once per value of `param`. Points go to
/// `<root>/<name>/sweep-<param>/point-<i>` and the table to `sweep.csv` there.
pub fn sweep(config: &ExperimentConfig, param: SweepParam, values: &[f64], root: &Path) -> Result<SweepOutcome> {
    if values.is_empty() {
        return Err(MetaError::InvalidConfig("sweep needs at least one value".into()));
    }
    let dir = experiment_dir(config, root).join(format!("sweep-{}", param.name()));
    let configs = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut c = param.apply(config, v)?;
            c.name = format!("point-{i:03}");
            c.output_dir = None;
            Ok((v, c))
        })
        .collect::<Result<Vec<_>>>()?;
    let one = |(value, c): &(f64, ExperimentConfig)| -> Result<SweepPoint> {
        let outcome = run_experiment(c, &dir)?;
        let ex = &outcome.execution;
        let fixed_point_dist = ex.ground_truth.fixed_point().map(|xf| (xf - ex.ground_truth.x_star()).norm());
        Ok(SweepPoint {
            value: *value,
            final_mean_dist_sq: ex.summary.last().map_or(f64::NAN, |r| r.mean_dist_sq),
            plateau_dist_sq: ex.fit.map(|f| f.plateau),
            fitted_factor: ex.fit.map(|f| f.factor),
            fixed_point_dist,
            passed: ex.passed(),
            dir: c.name.clone(),
        })
    };
    #[cfg(feature = "parallel")]
    let points = configs.par_iter().map(one).collect::<Result<Vec<_>>>()?;
    #[cfg(not(feature = "parallel"))]
    let points = configs.iter().map(one).collect::<Result<Vec<_>>>()?;
    fs::write(dir.join("sweep.csv"), sweep_csv(param, &points))?;
    Ok(SweepOutcome { dir, param, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{Checks, Repetitions};
    use crate::tasks::SuiteDescriptor;

    fn full_batch_config() -> ExperimentConfig {
        ExperimentConfig {
            name: "fb".into(),
            alpha: 0.1,
            output_dir: None,
            snapshot_stride: None,
            timing: false,
            suite: SuiteDescriptor::Quadratic { n: 4, d: 3, mu: 1.0, l: 4.0, spread: 1.0, seed: 2 },
            outer: OuterSpec::new(Method::ExactProxSgd, 0.25, 4, 300, 0),
            repetitions: Repetitions::Count { count: 1, base_seed: 0 },
            checks: Checks { thm54: true, ..Checks::default() },
        }
    }

    #[test]
    fn oracle_accuracy_by_method() {
        let spec = OuterSpec::new(Method::FoMaml, 0.1, 1, 1, 0);
        assert_eq!(oracle_accuracy(&spec, 0.1, 2.0), 0.2);
        let spec = spec.clone().with_inner(InnerSolverSpec::fixed_point(3));
        let spec = OuterSpec { method: Method::FoMuml, ..spec };
        assert!((oracle_accuracy(&spec, 0.1, 2.0) - 0.008).abs() < 1e-15);
        let spec = OuterSpec { method: Method::FullGd, ..spec };
        assert_eq!(oracle_accuracy(&spec, 0.1, 2.0), 0.0);
    }

    #[test]
    fn conforming_config_passes_and_is_deterministic() {
        let mut config = full_batch_config();
        config.alpha = 1.0 / (6f64.sqrt() * 4.0);
        let a = execute(&config).unwrap();
        assert!(a.passed(), "{:?}", a.checks);
        assert_eq!(a.checks[0].status, CheckStatus::Pass);
        let b = execute(&config).unwrap();
        assert_eq!(run_csv(0, &a.trajectories[0]), run_csv(0, &b.trajectories[0]));
    }

    #[test]
    fn violated_precondition_is_skipped() {
        let mut config = full_batch_config();
        config.alpha = 1.0;
        let ex = execute(&config).unwrap();
        assert_eq!(ex.checks[0].status, CheckStatus::PreconditionUnsatisfied);
        assert!(ex.passed());
    }

    #[test]
    fn csv_layout() {
        let ex = execute(&full_batch_config()).unwrap();
        let csv = run_csv(3, &ex.trajectories[0]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "run_id,k,dist_sq,F_val,grad_norm_sq,mean_cert_err,wall_ns");
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 7);
        assert_eq!(first[0], "3");
        assert_eq!(first[6], "0");
        assert_eq!(csv.lines().count(), 302);
        let summary = summary_csv(&ex.summary);
        assert!(summary.lines().next().unwrap().ends_with(",bound_thm54"));
    }

    #[test]
    fn sweep_param_application() {
        let config = full_batch_config();
        let c = SweepParam::Steps.apply(&config, 3.0).unwrap();
        assert_eq!(c.outer.inner, InnerSolverSpec::fixed_point(3));
        assert!(SweepParam::Tau.apply(&config, 2.5).is_err());
        assert_eq!(SweepParam::parse("alpha"), Some(SweepParam::Alpha));
        assert!(SweepParam::parse("gamma").is_none());
    }
}
