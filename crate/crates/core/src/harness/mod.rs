//! Experiment plumbing: configs, ground truth, rate fits, bound checks and
//! the on-disk CSV/JSON contract.
//!
//! An experiment directory holds `run_NNNN.csv` files with columns
//! `run_id,k,dist_sq,F_val,grad_norm_sq,mean_cert_err,wall_ns`, a
//! `summary.csv` across repetitions and a `metadata.json` sidecar tagged with
//! schema `"v1"`.

pub mod config;
pub mod experiment;
pub mod export;
pub mod fit;
pub mod ground_truth;
pub mod verify;

use std::path::PathBuf;

pub use config::{Checks, ExperimentConfig, Repetitions};
pub use experiment::{
    execute, oracle_accuracy, run_experiment, sweep, CheckResult, CheckStatus, Execution, ExperimentOutcome, Metadata,
    SweepOutcome, SweepParam, SweepPoint, RUN_COLUMNS,
};
pub use export::{export, write_counterexample, Landscape};
pub use fit::{fit_rate, RateFit};
pub use ground_truth::{
    bias_fixed_point, estimate_variance_bound, fo_maml_fixed_point, ground_truth, numerical_ground_truth,
    solve_ground_truth, GroundTruth,
};
pub use verify::{verify, VerifyReport, VerifyTarget};

/// Version tag of the JSON sidecars.
pub const SCHEMA_VERSION: &str = "v1";

/// Environment variable naming the output root.
pub const OUTPUT_ROOT_ENV: &str = "MOREAU_OUTPUT_DIR";

/// Environment variable overriding the recorded source revision.
pub const REVISION_ENV: &str = "MOREAU_GIT_REVISION";

/// `$MOREAU_OUTPUT_DIR`, or `./out`.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

/// `$MOREAU_GIT_REVISION`, else `git rev-parse HEAD`, else `"unknown"`.
pub fn git_revision() -> String {
    if let Ok(rev) = std::env::var(REVISION_ENV) {
        return rev;
    }
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}
