use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{Checks, ExperimentConfig, Repetitions};
use super::experiment::{run_experiment, sweep, SweepParam};
use super::verify::{bound_configs, VerifyTarget};
use super::SCHEMA_VERSION;
use crate::algorithms::{Method, OuterSpec};
use crate::counterexamples::{
    landscape, peak_targets, verify_nonconvexity, verify_nonsmoothness, LandscapeRow, NonconvexityReport,
    NonsmoothnessReport, PiecewiseQuartic, QuadraticCosine,
};
use crate::tasks::SuiteDescriptor;
use crate::Result;

/// Which counterexample landscape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Landscape {
    Nonconvex,
    Nonsmooth,
}

impl Landscape {
    pub fn name(self) -> &'static str {
        match self {
            Landscape::Nonconvex => "nonconvex",
            Landscape::Nonsmooth => "nonsmooth",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [Landscape::Nonconvex, Landscape::Nonsmooth].into_iter().find(|l| l.name() == name)
    }

    /// Inner-solution grid: offset from the kinks of the piecewise quartic,
    /// several periods of the cosine.
    pub fn z_grid(self) -> Vec<f64> {
        match self {
            Landscape::Nonconvex => (0..=200).map(|j| -2.5 + 0.025 * j as f64 + 0.0125).collect(),
            Landscape::Nonsmooth => (0..=1320).map(|j| 0.05 * j as f64).collect(),
        }
    }
}

/// JSON block written next to a landscape CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Verdict {
    Nonconvex(NonconvexityReport),
    Nonsmooth(NonsmoothnessReport),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleFile {
    pub schema: String,
    pub function: String,
    pub alpha: f64,
    pub verdict: Verdict,
    pub csv: String,
}

pub const LANDSCAPE_COLUMNS: [&str; 5] = ["x", "z", "phi", "phi_second_closed", "phi_second_fd"];

pub fn landscape_csv(rows: &[LandscapeRow]) -> String {
    let mut out = LANDSCAPE_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.x, r.z, r.phi, r.phi_second_closed, r.phi_second_fd);
    }
    out
}

/// Landscape table and verdict for one `alpha`.
pub fn counterexample(kind: Landscape, alpha: f64) -> Result<(Vec<LandscapeRow>, CounterexampleFile)> {
    let grid = kind.z_grid();
    let (rows, verdict, function) = match kind {
        Landscape::Nonconvex => {
            let f = PiecewiseQuartic;
            (landscape(&f, alpha, &grid)?, Verdict::Nonconvex(verify_nonconvexity(alpha)?), "piecewise-quartic")
        }
        Landscape::Nonsmooth => {
            let f = QuadraticCosine;
            (
                landscape(&f, alpha, &grid)?,
                Verdict::Nonsmooth(verify_nonsmoothness(alpha, &peak_targets(10))?),
                "quadratic-cosine",
            )
        }
    };
    let csv = format!("counterexample-{}-alpha{alpha}.csv", kind.name());
    Ok((rows, CounterexampleFile { schema: SCHEMA_VERSION.into(), function: function.into(), alpha, verdict, csv }))
}

/// Writes `counterexample-<kind>-alpha<v>.csv` and `.json` into `dir`.
pub fn write_counterexample(kind: Landscape, alpha: f64, dir: &Path) -> Result<CounterexampleFile> {
    let (rows, file) = counterexample(kind, alpha)?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join(&file.csv), landscape_csv(&rows))?;
    let json = file.csv.trim_end_matches(".csv").to_string() + ".json";
    fs::write(dir.join(json), serde_json::to_string_pretty(&file)?)?;
    Ok(file)
}

/// Full-batch FO-MAML on `{x^2/2, (x - 3)^2}`, whose fixed point is biased
/// away from the minimizer of the envelope average.
pub fn bias_config() -> ExperimentConfig {
    ExperimentConfig {
        name: "bias".into(),
        alpha: 0.1,
        output_dir: None,
        snapshot_stride: None,
        timing: false,
        suite: SuiteDescriptor::ExplicitQuadratic { curvatures: vec![vec![1.0], vec![2.0]], centers: vec![vec![0.0], vec![3.0]] },
        outer: OuterSpec::new(Method::FoMaml, 0.5, 2, 200, 0),
        repetitions: Repetitions::Count { count: 1, base_seed: 0 },
        checks: Checks::default(),
    }
}

pub const BIAS_ALPHAS: [f64; 5] = [0.0125, 0.025, 0.05, 0.1, 0.2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub files: Vec<String>,
}

/// Writes everything the plotting component reads: landscape tables for the
/// nonconvex example at `alpha` in {0.01, 0.1, 1} and the nonsmooth one at 1,
/// the bias `alpha` sweep and one bound-checked convergence run.
pub fn export(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for alpha in [0.01, 0.1, 1.0] {
        let f = write_counterexample(Landscape::Nonconvex, alpha, dir)?;
        files.push(f.csv);
    }
    files.push(write_counterexample(Landscape::Nonsmooth, 1.0, dir)?.csv);

    let bias = sweep(&bias_config(), SweepParam::Alpha, &BIAS_ALPHAS, dir)?;
    files.push(rel(dir, &bias.dir.join("sweep.csv")));

    if let Some(config) = bound_configs(VerifyTarget::Thm54).into_iter().next() {
        let outcome = run_experiment(&config, dir)?;
        files.push(rel(dir, &outcome.dir.join("metadata.json")));
    }
    let manifest = Manifest { schema: SCHEMA_VERSION.into(), files };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

fn rel(root: &Path, path: &Path) -> String {
    path.strip_prefix(root).unwrap_or(path).to_string_lossy().replace('\\', "/")
}
