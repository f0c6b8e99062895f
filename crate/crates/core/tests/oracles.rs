//! Closed-form and Monte-Carlo oracles checked end to end.

use moreau_core::algorithms::{run, run_exact_prox_sgd, run_full_gd, Method, Monitor, OuterSpec};
use moreau_core::envelope::prox_to_delta;
use moreau_core::harness::config::{Checks, ExperimentConfig, Repetitions};
use moreau_core::harness::experiment::{run_experiment, sweep, CheckStatus, SweepParam};
use moreau_core::harness::export::{bias_config, export, write_counterexample, Landscape, Manifest};
use moreau_core::harness::{fit_rate, fo_maml_fixed_point, solve_ground_truth, Metadata, SCHEMA_VERSION};
use moreau_core::tasks::{make_quadratic_suite, scalar_quadratic_suite, SuiteDescriptor};
use moreau_core::theory::{mismatched_step_bound, perturbed_alpha_max};
use moreau_core::Vector;

#[test]
fn mismatched_bound_formula() {
    assert!((mismatched_step_bound(0.1, 0.05, 1.0, 2) - 0.0525).abs() < 1e-15);
    assert!((mismatched_step_bound(0.3, 0.3, 1.0, 4) - 0.3f64.powi(4)).abs() < 1e-15);
    assert!((mismatched_step_bound(0.1, 0.05, 1.0, 200) - 0.05).abs() < 1e-15);
}

#[test]
fn certified_oracle_step_counts() {
    let suite = make_quadratic_suite(10, 5, 0.1, 2.0, 2.0, 12).unwrap();
    let x = Vector::from_fn(5, |i, _| 1.0 - 0.3 * i as f64);
    for al in [0.1, 0.25, 0.5] {
        for task in suite.tasks() {
            let alpha = al / task.smoothness();
            let r = prox_to_delta(task, &x, alpha, al, al / 100.0).unwrap();
            assert_eq!(r.steps, 1);
            for s in 1..5usize {
                let delta = al.powi(s as i32 + 1);
                let r = prox_to_delta(task, &x, alpha, delta, delta / 100.0).unwrap();
                assert!(r.steps <= s + 1, "s={s}: {} steps", r.steps);
                assert!(r.certified_rel_err.unwrap() <= delta);
            }
        }
    }
}

#[test]
fn exact_prox_sgd_is_unbiased_for_one_step() {
    let suite = make_quadratic_suite(6, 2, 0.5, 2.0, 2.0, 21).unwrap();
    let x0 = Vector::from_vec(vec![1.0, -1.0]);
    let (alpha, beta) = (0.2, 0.3);
    let gd = run_full_gd(&suite, &x0, alpha, beta, 1, &Monitor::default()).unwrap().final_x;
    let xs: Vec<Vector> = (0..100)
        .map(|seed| run_exact_prox_sgd(&suite, &x0, alpha, beta, 2, 1, seed, &Monitor::default()).unwrap().final_x)
        .collect();
    for j in 0..2 {
        let vals: Vec<f64> = xs.iter().map(|x| x[j]).collect();
        let mean = vals.iter().sum::<f64>() / 100.0;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 99.0).sqrt();
        assert!((mean - gd[j]).abs() <= 3.0 * sd / 10.0, "coordinate {j}");
    }
}

#[test]
fn zero_spread_reaches_common_minimizer() {
    let suite = make_quadratic_suite(4, 3, 0.5, 2.0, 0.0, 3).unwrap();
    let x0 = Vector::from_element(3, 1.0);
    let monitor = Monitor::distance(Vector::zeros(3));
    let t = run_exact_prox_sgd(&suite, &x0, 0.3, 0.4, 2, 600, 5, &monitor).unwrap();
    assert!(t.records.last().unwrap().dist_sq.unwrap() <= 1e-16);
}

#[test]
fn full_gd_contraction_on_quadratics() {
    let suite = make_quadratic_suite(5, 4, 0.2, 3.0, 1.0, 8).unwrap();
    let alpha = 0.25;
    let gt = solve_ground_truth(&suite, alpha).unwrap();
    let beta = 1.0 / gt.smoothness;
    let x0 = Vector::from_element(4, 2.0);
    let t = run_full_gd(&suite, &x0, alpha, beta, 60, &Monitor::distance(gt.x_star())).unwrap();
    let q = (1.0 - beta * gt.strong_convexity).abs().max((1.0 - beta * gt.smoothness).abs()).powi(2);
    for w in t.records.windows(2) {
        let (a, b) = (w[0].dist_sq.unwrap(), w[1].dist_sq.unwrap());
        if a > 1e-24 {
            assert!(b <= q * a * (1.0 + 1e-9) + 1e-28);
        }
    }
}

#[test]
fn fitted_factor_matches_scalar_gd() {
    let suite = scalar_quadratic_suite(&[2.0], &[1.0]).unwrap();
    let alpha = 0.5;
    let gt = solve_ground_truth(&suite, alpha).unwrap();
    let beta = 0.2;
    let t = run_full_gd(&suite, &Vector::from_element(1, 4.0), alpha, beta, 60, &Monitor::distance(gt.x_star())).unwrap();
    let fit = fit_rate(&t.dist_sq().unwrap()).unwrap();
    assert!((fit.factor - (1.0 - beta * gt.strong_convexity).powi(2)).abs() < 1e-6);
}

#[test]
fn fo_maml_plateau_is_fixed_point_bias() {
    let suite = scalar_quadratic_suite(&[1.0, 2.0], &[0.0, 3.0]).unwrap();
    let alpha = 0.1;
    let gt = solve_ground_truth(&suite, alpha).unwrap();
    let xf = fo_maml_fixed_point(&suite, alpha).unwrap();
    let spec = OuterSpec::new(Method::FoMaml, 0.5, 2, 300, 0);
    let t = run(&suite, alpha, &spec, &Monitor::distance(gt.x_star())).unwrap();
    let fit = fit_rate(&t.dist_sq().unwrap()).unwrap();
    assert!((fit.plateau - (xf - gt.x_star()).norm_squared()).abs() <= 1e-8);
}

fn thm54_config(name: &str, alpha: f64) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        alpha,
        output_dir: None,
        snapshot_stride: Some(50),
        timing: false,
        suite: SuiteDescriptor::Quadratic { n: 4, d: 3, mu: 0.5, l: 2.0, spread: 1.0, seed: 1 },
        outer: OuterSpec::new(Method::FullGd, 4.0 / 8.0, 4, 200, 0),
        repetitions: Repetitions::Count { count: 1, base_seed: 0 },
        checks: Checks { thm54: true, ..Checks::default() },
    }
}

#[test]
fn deterministic_runs_write_identical_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let config = thm54_config("det", perturbed_alpha_max(2.0));
    let a = run_experiment(&config, &dir.path().join("a")).unwrap();
    let b = run_experiment(&config, &dir.path().join("b")).unwrap();
    for file in ["run_0000.csv", "run_0000_snapshots.csv", "summary.csv"] {
        let x = std::fs::read(a.dir.join(file)).unwrap();
        let y = std::fs::read(b.dir.join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
    assert!(a.passed());
    let meta: Metadata = serde_json::from_str(&std::fs::read_to_string(a.dir.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta.schema, SCHEMA_VERSION);
    assert_eq!(meta.config_hash, config.hash());
    assert_eq!(meta.checks[0].status, CheckStatus::Pass);
    assert!(meta.ground_truth.residual <= 1e-9);
}

#[test]
fn unmet_precondition_is_skipped_not_failed() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&thm54_config("skip", 1.0), dir.path()).unwrap();
    assert!(out.passed());
    assert_eq!(out.metadata.checks[0].status, CheckStatus::PreconditionUnsatisfied);
    let json = std::fs::read_to_string(out.dir.join("metadata.json")).unwrap();
    assert!(json.contains("\"precondition-unsatisfied\""));
}

#[test]
fn alpha_sweep_of_the_bias() {
    let dir = tempfile::tempdir().unwrap();
    let alphas = [0.025, 0.05, 0.1];
    let out = sweep(&bias_config(), SweepParam::Alpha, &alphas, dir.path()).unwrap();
    let table = std::fs::read_to_string(out.dir.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    let d: Vec<f64> = out.points.iter().map(|p| p.fixed_point_dist.unwrap()).collect();
    assert!((d[2] - 0.021176).abs() < 1e-6);
    assert!(d[0] < d[1] && d[1] < d[2]);
}

#[test]
fn counterexample_files_and_export_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_counterexample(Landscape::Nonconvex, 0.1, dir.path()).unwrap();
    assert!(dir.path().join(&file.csv).exists());
    assert!(dir.path().join("counterexample-nonconvex-alpha0.1.json").exists());

    let manifest_path = export(&dir.path().join("bundle")).unwrap();
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest.schema, SCHEMA_VERSION);
    for f in &manifest.files {
        assert!(dir.path().join("bundle").join(f).exists(), "{f}");
    }
}
