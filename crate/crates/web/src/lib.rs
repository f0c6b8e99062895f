//! Browser bindings for three interactive views: the 1-D iMAML landscapes,
//! the step-size bias of first-order MAML, and a side-by-side convergence
//! comparison. Every export returns a JSON string.

use moreau_core::algorithms::{run, Method, Monitor, OuterSpec};
use moreau_core::counterexamples::LandscapeRow;
use moreau_core::envelope::InnerSolverSpec;
use moreau_core::harness::export::{counterexample, Verdict};
use moreau_core::harness::{fo_maml_fixed_point, solve_ground_truth, Landscape};
use moreau_core::tasks::{make_quadratic_suite, scalar_quadratic_suite};
use moreau_core::{MetaError, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
pub struct Curve {
    pub rows: Vec<LandscapeRow>,
    pub verdict: Verdict,
}

pub fn curve(kind: &str, alpha: f64) -> Result<Curve> {
    let kind = Landscape::parse(kind).ok_or_else(|| MetaError::InvalidConfig(format!("unknown landscape {kind:?}")))?;
    let (rows, file) = counterexample(kind, alpha)?;
    Ok(Curve { rows, verdict: file.verdict })
}

#[derive(Serialize)]
pub struct BiasSweep {
    pub alphas: Vec<f64>,
    /// `|x_inf - x*|` of full-batch FO-MAML.
    pub bias: Vec<f64>,
    /// Least-squares slope of `log bias` against `log alpha`.
    pub slope: f64,
}

/// Two scalar tasks with curvatures 1, 2 and minimizers 0, 3.
pub fn bias(alpha_lo: f64, alpha_hi: f64, points: usize) -> Result<BiasSweep> {
    if !(alpha_lo > 0.0 && alpha_hi > alpha_lo) || points < 2 {
        return Err(MetaError::InvalidConfig("need 0 < lo < hi and at least two points".into()));
    }
    let suite = scalar_quadratic_suite(&[1.0, 2.0], &[0.0, 3.0])?;
    let ratio = (alpha_hi / alpha_lo).powf(1.0 / (points - 1) as f64);
    let alphas: Vec<f64> = (0..points).map(|j| alpha_lo * ratio.powi(j as i32)).collect();
    let bias = alphas
        .iter()
        .map(|&a| Ok((fo_maml_fixed_point(&suite, a)? - solve_ground_truth(&suite, a)?.x_star()).norm()))
        .collect::<Result<Vec<f64>>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = alphas.iter().zip(&bias).map(|(a, b)| (a.ln(), b.ln())).unzip();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(BiasSweep { alphas, bias, slope: cov / var })
}

#[derive(Serialize)]
pub struct Series {
    pub method: String,
    pub dist_sq: Vec<f64>,
}

/// FO-MAML, FO-MuML with `steps` inner steps and exact-prox SGD on one
/// random quadratic suite, all from the same start and seed.
pub fn compare(alpha: f64, beta: f64, steps: usize, iterations: usize, seed: u64) -> Result<Vec<Series>> {
    let suite = make_quadratic_suite(8, 4, 0.5, 2.0, 1.0, seed)?;
    let gt = solve_ground_truth(&suite, alpha)?;
    let monitor = Monitor::distance(gt.x_star());
    let x0 = vec![3.0; 4];
    let specs = [
        ("FO-MAML", OuterSpec::new(Method::FoMaml, beta, 2, iterations, seed)),
        (
            "FO-MuML",
            OuterSpec::new(Method::FoMuml, beta, 2, iterations, seed).with_inner(InnerSolverSpec::fixed_point(steps)),
        ),
        ("exact prox", OuterSpec::new(Method::ExactProxSgd, beta, 2, iterations, seed)),
    ];
    specs
        .into_iter()
        .map(|(name, spec)| {
            let t = run(&suite, alpha, &spec.with_x0(x0.clone()), &monitor)?;
            Ok(Series { method: name.into(), dist_sq: t.dist_sq().unwrap_or_default() })
        })
        .collect()
}

fn to_js<T: Serialize>(value: Result<T>) -> std::result::Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn counterexample_curve(kind: &str, alpha: f64) -> std::result::Result<String, JsError> {
    to_js(curve(kind, alpha))
}

#[wasm_bindgen]
pub fn bias_sweep(alpha_lo: f64, alpha_hi: f64, points: usize) -> std::result::Result<String, JsError> {
    to_js(bias(alpha_lo, alpha_hi, points))
}

#[wasm_bindgen]
pub fn compare_methods(
    alpha: f64,
    beta: f64,
    steps: usize,
    iterations: usize,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_js(compare(alpha, beta, steps, iterations, seed as u64))
}
