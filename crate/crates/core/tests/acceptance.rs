//! Acceptance suite. Each test prints one `criterion N ...: PASS|FAIL` line.

use std::time::{Duration, Instant};

use moreau_core::algorithms::{run, Method, Monitor, OuterSpec};
use moreau_core::counterexamples::{
    bisect_sign_change, landscape, peak_targets, verify_nonconvexity, verify_nonsmoothness, PiecewiseQuartic,
    QuadraticCosine, ScalarFunction, Verdict, PUBLISHED_THRESHOLD,
};
use moreau_core::envelope::InnerSolverSpec;
use moreau_core::harness::experiment::{execute, CheckStatus};
use moreau_core::harness::export::{bias_config, BIAS_ALPHAS};
use moreau_core::harness::verify::{bound_configs, verify, VerifyReport, VerifyTarget};
use moreau_core::harness::{fo_maml_fixed_point, solve_ground_truth};
use moreau_core::tasks::{make_quadratic_suite, scalar_quadratic_suite};
use moreau_core::theory::BoundId;
use moreau_core::Vector;

fn report(n: u32, what: &str, pass: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let ok = pass && elapsed <= limit;
    println!(
        "criterion {n} ({what}): {} [{:.2}s of {:.0}s] {detail}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs_f64()
    );
    assert!(pass, "criterion {n} failed: {detail}");
    assert!(elapsed <= limit, "criterion {n} exceeded its time budget");
}

fn parts(r: &VerifyReport) -> String {
    r.parts
        .iter()
        .map(|p| format!("{}: {}/{} violations, max ratio {:.3e}", p.name, p.violations, p.cases, p.max_ratio))
        .collect::<Vec<_>>()
        .join("; ")
}

#[test]
fn criterion_1_inner_step_bound() {
    let t = Instant::now();
    let r = verify(VerifyTarget::Lemma4).unwrap();
    report(1, "inner-step bound", r.passed, t.elapsed(), Duration::from_secs(5), &parts(&r));
}

#[test]
fn criterion_2_mismatched_inner_step() {
    let t = Instant::now();
    let r = verify(VerifyTarget::RemarkA1).unwrap();
    report(2, "mismatched inner step", r.passed, t.elapsed(), Duration::from_secs(5), &parts(&r));
}

#[test]
fn criterion_3_envelope_identities() {
    let t = Instant::now();
    let r = verify(VerifyTarget::Envelope).unwrap();
    let pairs_ok = r.parts.iter().filter(|p| p.name.starts_with("envelope smooth")).all(|p| p.cases >= 3000);
    report(3, "envelope identities and constants", r.passed && pairs_ok, t.elapsed(), Duration::from_secs(10), &parts(&r));
}

#[test]
fn criterion_4_deterministic_perturbed_iterate_bound() {
    let t = Instant::now();
    let configs = bound_configs(VerifyTarget::Thm54);
    assert_eq!(configs.len(), 5);
    let mut kappas = Vec::new();
    let mut violations = 0;
    let mut worst = 0.0f64;
    let mut all_pass = true;
    for c in &configs {
        assert_eq!(c.outer.iterations, 2000);
        let ex = execute(c).unwrap();
        kappas.push(ex.ground_truth.kappa.round());
        let check = &ex.checks[0];
        all_pass &= check.status == CheckStatus::Pass && check.checked_points == 2001;
        violations += check.violations.len();
        worst = worst.max(check.max_ratio);
    }
    kappas.sort_by(f64::total_cmp);
    kappas.dedup();
    let detail = format!("kappas {kappas:?}, {violations} violations, max ratio {worst:.4}");
    report(4, "deterministic perturbed-iterate bound", all_pass && violations == 0 && kappas == [1.0, 10.0, 100.0], t.elapsed(), Duration::from_secs(30), &detail);
}

#[test]
fn criterion_5_stochastic_inexact_oracle_bound() {
    let t = Instant::now();
    let config = bound_configs(VerifyTarget::Thm42).remove(0);
    assert_eq!((config.outer.tau, config.repetitions.len()), (1, 200));
    let ex = execute(&config).unwrap();
    let rate = *ex.theory.rate(BoundId::InexactOracleSgd).unwrap();
    assert!(rate.precondition_satisfied);
    let d0 = ex.summary[0].mean_dist_sq;
    let mut pass = true;
    let mut detail = String::new();
    for k in [10, 100, 1000] {
        let row = &ex.summary[k];
        let bound = rate.at(k, d0);
        pass &= row.mean_dist_sq <= bound + 3.0 * row.se_dist_sq;
        detail += &format!("k={k}: mean {:.4e} <= {:.4e} + 3*{:.1e}; ", row.mean_dist_sq, bound, row.se_dist_sq);
    }
    report(5, "stochastic inexact-oracle bound", pass, t.elapsed(), Duration::from_secs(120), &detail);
}

fn bias(alpha: f64) -> f64 {
    let suite = scalar_quadratic_suite(&[1.0, 2.0], &[0.0, 3.0]).unwrap();
    let gt = solve_ground_truth(&suite, alpha).unwrap();
    (fo_maml_fixed_point(&suite, alpha).unwrap()[0] - gt.x_star[0]).abs()
}

#[test]
fn criterion_6_bias_scaling() {
    let t = Instant::now();
    let suite = scalar_quadratic_suite(&[1.0, 2.0], &[0.0, 3.0]).unwrap();
    let (b1, b2) = (bias(0.1), bias(0.05));
    let mut pass = (b1 - 0.021176).abs() < 1e-6 && (b2 - 0.005116).abs() < 5e-6 && (b1 / b2 - 4.14).abs() < 0.01;

    let mut run_err = 0.0f64;
    let mut logs = Vec::new();
    for alpha in BIAS_ALPHAS {
        let config = bias_config();
        let spec = OuterSpec { iterations: 400, ..config.outer.clone() };
        let gt = solve_ground_truth(&suite, alpha).unwrap();
        let traj = run(&suite, alpha, &spec, &Monitor::default()).unwrap();
        let xf = fo_maml_fixed_point(&suite, alpha).unwrap()[0];
        run_err = run_err.max((traj.final_x[0] - xf).abs());
        logs.push((alpha.ln(), (traj.final_x[0] - gt.x_star[0]).abs().ln()));
    }
    let m = logs.len() as f64;
    let (mx, my) = logs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
    let slope = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / logs.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>();
    pass &= run_err <= 1e-8 && (1.85..=2.15).contains(&slope);
    let detail = format!("bias(0.1)={b1:.6}, bias(0.05)={b2:.7}, ratio {:.3}, run vs oracle {run_err:.1e}, slope {slope:.3}", b1 / b2);
    report(6, "bias scaling", pass, t.elapsed(), Duration::from_secs(10), &detail);
}

#[test]
fn criterion_7_nonconvex_stationarity_bound() {
    let t = Instant::now();
    let config = bound_configs(VerifyTarget::Thm56).remove(0);
    let ex = execute(&config).unwrap();
    let i = ex.theory.inputs;
    assert!(ex.ground_truth.numerical);
    assert!((i.alpha * i.l - 0.125).abs() < 1e-12 && (i.beta * i.l - 1.0 / 16.0).abs() < 1e-12);
    let check = &ex.checks[0];
    let mut detail = format!("sigma^2 estimate {:.4e}; ", i.sigma_sq.unwrap());
    let mut pass = check.status == CheckStatus::Pass;
    for k in [100, 1000] {
        let best = ex.summary[..=k].iter().map(|r| r.mean_grad_norm_sq).fold(f64::INFINITY, f64::min);
        let bound = ex.summary[k].bounds.iter().find(|(id, _)| *id == BoundId::Nonconvex).unwrap().1;
        pass &= best <= bound;
        detail += &format!("k={k}: min {best:.4e} <= {bound:.4e}; ");
    }
    report(7, "nonconvex stationarity bound", pass, t.elapsed(), Duration::from_secs(60), &detail);
}

fn verdict_is_nonconvex(alpha: f64) -> bool {
    verify_nonconvexity(alpha).unwrap().verdict == Verdict::Nonconvex
}

#[test]
fn criterion_8a_nonconvexity_threshold() {
    let t = Instant::now();
    let flip = bisect_sign_change(|a| if verdict_is_nonconvex(a) { 1.0 } else { -1.0 }, 1e-4, 10.0, 1e-9);
    let grid = [0.01, 0.02, 0.05, 0.1, 0.5, 0.95, 1.0, 2.0];
    let mismatches: Vec<f64> =
        grid.into_iter().filter(|&a| verdict_is_nonconvex(a) != (a > PUBLISHED_THRESHOLD)).collect();
    let located = flip.is_some_and(|a| (a - PUBLISHED_THRESHOLD).abs() <= 1e-6);
    let detail = format!(
        "verdict flips at alpha={:?}, expected {PUBLISHED_THRESHOLD:.9}; grid mismatches {mismatches:?}",
        flip
    );
    report(8, "nonconvexity threshold", located && mismatches.is_empty(), t.elapsed(), Duration::from_secs(5), &detail);
}

#[test]
fn criterion_8b_curvature_closed_form_vs_differences() {
    let t = Instant::now();
    let grid: Vec<f64> = (0..50).map(|j| -1.95 + 0.08 * j as f64).collect();
    let mut worst = 0.0f64;
    let mut cases = 0;
    let functions: [&dyn ScalarFunction; 2] = [&PiecewiseQuartic, &QuadraticCosine];
    for f in functions {
        for alpha in [0.05, 0.1, 0.5, 1.0] {
            for row in landscape(f, alpha, &grid).unwrap() {
                if row.phi_second_closed.abs() >= 1e-3 {
                    cases += 1;
                    worst = worst.max((row.phi_second_fd - row.phi_second_closed).abs() / row.phi_second_closed.abs());
                }
            }
        }
    }
    let detail = format!("{cases} cases, max relative gap {worst:.2e}");
    report(8, "curvature closed form vs differences", worst <= 1e-4 && cases > 300, t.elapsed(), Duration::from_secs(5), &detail);
}

#[test]
fn criterion_8c_unbounded_curvature() {
    let t = Instant::now();
    let r = verify_nonsmoothness(1.0, &peak_targets(10)).unwrap();
    let increasing = r.running_max.windows(2).all(|w| w[1] > w[0]);
    let fd_ok = r.rows.iter().all(|row| (row.phi_second_fd - row.phi_second_closed).abs() <= 1e-4 * row.phi_second_closed.abs());
    let detail = format!("running max {:.4} .. {:.4}", r.running_max[0], r.max_abs_phi_second);
    report(8, "unbounded curvature", increasing && fd_ok, t.elapsed(), Duration::from_secs(5), &detail);
}

#[test]
fn criterion_9_reduction_identities() {
    let t = Instant::now();
    let mut pass = true;
    for (seed, n, d) in [(1u64, 5usize, 3usize), (2, 8, 1), (3, 4, 6)] {
        let suite = make_quadratic_suite(n, d, 0.3, 3.0, 1.5, seed).unwrap();
        let x0 = vec![1.0; d];
        let monitor = Monitor::default();
        let maml = OuterSpec::new(Method::FoMaml, 0.05, 2, 200, seed).with_x0(x0.clone());
        let muml = OuterSpec { method: Method::FoMuml, inner: InnerSolverSpec::fixed_point(1), ..maml.clone() };
        let a = run(&suite, 0.2, &maml, &monitor).unwrap();
        let b = run(&suite, 0.2, &muml, &monitor).unwrap();
        pass &= a.final_x.as_slice().iter().zip(b.final_x.as_slice()).all(|(p, q)| p.to_bits() == q.to_bits());

        let gd = OuterSpec::new(Method::FullGd, 0.05, n, 200, seed).with_x0(x0.clone());
        let exact = OuterSpec { method: Method::FoMuml, inner: InnerSolverSpec::ExactClosedForm, ..gd.clone() };
        let c = run(&suite, 0.2, &gd, &monitor).unwrap();
        let e = run(&suite, 0.2, &exact, &monitor).unwrap();
        pass &= c.final_x.as_slice().iter().zip(e.final_x.as_slice()).all(|(p, q)| p.to_bits() == q.to_bits());
        pass &= c.final_x != Vector::from_vec(x0);
    }
    report(9, "reduction identities", pass, t.elapsed(), Duration::from_secs(5), "3 seeded configs, bitwise");
}
