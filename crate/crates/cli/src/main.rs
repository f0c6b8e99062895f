//! `moreau`: run experiments, sweeps, bound verifications and counterexample
//! exports. Outputs land under `$MOREAU_OUTPUT_DIR` (default `./out`).
//!
//! Exit codes: 0 on success, 1 on error, 2 when an enabled bound check fails.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use moreau_core::harness::experiment::{CheckResult, CheckStatus};
use moreau_core::harness::{self, ExperimentConfig, Landscape, SweepParam, VerifyTarget};

#[derive(Parser)]
#[command(name = "moreau", version, about = "First-order meta-learning on sums of Moreau envelopes")]
struct Cli {
    /// Output root; overrides the environment variable.
    #[arg(long, global = true, env = harness::OUTPUT_ROOT_ENV)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run { config: PathBuf },
    /// Rerun a config over a list of values of one parameter.
    Sweep {
        /// alpha, beta, tau, iterations, steps or delta.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        config: PathBuf,
    },
    /// Numerically check an inner-solver bound, a convergence bound or the envelope identities.
    Verify {
        /// lemma4, remarkA1, thm41, thm42, thm54, thm56 or envelope.
        target: String,
    },
    /// Write the landscape CSV and verdict JSON of a 1-D counterexample.
    Counterexample {
        /// nonconvex or nonsmooth.
        kind: String,
        #[arg(long)]
        alpha: f64,
    },
    /// Write the full figure-input bundle.
    Export {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

fn report_checks(checks: &[CheckResult]) {
    for c in checks {
        let status = match c.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::PreconditionUnsatisfied => "precondition-unsatisfied, skipped",
        };
        println!(
            "  {}: {status} ({} points, max ratio {:.3e}, {} violations)",
            c.bound.name(),
            c.checked_points,
            c.max_ratio,
            c.violations.len()
        );
    }
}

fn exit_for(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    let root = cli.out.unwrap_or_else(harness::output_root);
    match cli.command {
        Command::Run { config } => {
            let config = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let outcome = harness::run_experiment(&config, &root)?;
            println!("{}: {}", config.name, outcome.dir.display());
            if let Some(fit) = &outcome.execution.fit {
                println!("  fitted factor {:.6}, plateau {:.3e}", fit.factor, fit.plateau);
            }
            report_checks(&outcome.execution.checks);
            Ok(exit_for(outcome.passed()))
        }
        Command::Sweep { param, values, config } => {
            let param = SweepParam::parse(&param).ok_or_else(|| anyhow!("unknown sweep parameter {param:?}"))?;
            let config = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let outcome = harness::sweep(&config, param, &values, &root)?;
            println!("{}", outcome.dir.join("sweep.csv").display());
            for p in &outcome.points {
                println!(
                    "  {}={}: final {:.3e}{}",
                    param.name(),
                    p.value,
                    p.final_mean_dist_sq,
                    if p.passed { "" } else { " FAIL" }
                );
            }
            Ok(exit_for(outcome.passed()))
        }
        Command::Verify { target } => {
            let target = VerifyTarget::parse(&target).ok_or_else(|| anyhow!("unknown verify target {target:?}"))?;
            let report = harness::verify(target)?;
            for p in &report.parts {
                println!("  {}: {} cases, {} violations, max ratio {:.3e}", p.name, p.cases, p.violations, p.max_ratio);
            }
            report_checks(&report.checks);
            println!("{}: {}", target.name(), if report.passed { "pass" } else { "FAIL" });
            Ok(exit_for(report.passed))
        }
        Command::Counterexample { kind, alpha } => {
            let kind = Landscape::parse(&kind).ok_or_else(|| anyhow!("unknown counterexample {kind:?}"))?;
            std::fs::create_dir_all(&root)?;
            let file = harness::write_counterexample(kind, alpha, &root)?;
            println!("{}", serde_json::to_string_pretty(&file.verdict)?);
            println!("{}", root.join(&file.csv).display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { dir } => {
            let manifest = harness::export(&dir.unwrap_or(root))?;
            println!("{}", manifest.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
