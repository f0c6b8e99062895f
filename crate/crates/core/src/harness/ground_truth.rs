use nalgebra::{SymmetricEigen, LU};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::envelope::evaluate_suite;
use crate::rng::{self, streams};
use crate::tasks::{Convexity, TaskSuite};
use crate::theory::envelope_constants;
use crate::{Matrix, MetaError, Result, Vector};

/// Required `|grad F(x*)|` for an accepted ground truth.
pub const STATIONARITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    /// `1/n sum_i |grad F_i(x*)|^2`.
    pub sigma_star_sq: f64,
    pub kappa: f64,
    /// Smoothness of `F`.
    pub smoothness: f64,
    /// Strong convexity of `F`.
    pub strong_convexity: f64,
    /// `|grad F(x*)|` as evaluated after solving.
    pub residual: f64,
    /// Full-batch FO-MAML fixed point (quadratic suites).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_point: Option<Vec<f64>>,
    /// `true` when `x*` was found by gradient descent rather than a linear solve.
    pub numerical: bool,
}

impl GroundTruth {
    pub fn x_star(&self) -> Vector {
        Vector::from_column_slice(&self.x_star)
    }

    pub fn fixed_point(&self) -> Option<Vector> {
        self.fixed_point.as_deref().map(Vector::from_column_slice)
    }
}

fn quadratic_parts(suite: &TaskSuite) -> Result<Vec<(&Matrix, &Vector)>> {
    suite.tasks().iter().map(|t| t.quadratic_parts().ok_or(MetaError::RequiresQuadratic)).collect()
}

fn solve_symmetric(m: Matrix, b: &Vector, what: &str) -> Result<Vector> {
    let lu = LU::new(m.clone());
    let mut x = lu.solve(b).ok_or_else(|| MetaError::SingularSystem(what.into()))?;
    let r = b - &m * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(MetaError::SingularSystem(what.into()))
    }
}

/// `(I + alpha A)^{-1} A`, the Hessian of the envelope of a quadratic.
fn envelope_hessian(a: &Matrix, alpha: f64) -> Result<Matrix> {
    let d = a.nrows();
    let shifted = Matrix::identity(d, d) + a * alpha;
    let m = LU::new(shifted).solve(a).ok_or_else(|| MetaError::SingularSystem("I + alpha A".into()))?;
    Ok((&m + m.transpose()) * 0.5)
}

fn stats(suite: &TaskSuite, alpha: f64, x_star: Vector, smoothness: f64, strong_convexity: f64) -> Result<GroundTruth> {
    let eval = evaluate_suite(suite, &x_star, alpha)?;
    let sigma_star_sq = eval.task_grads.iter().map(|g| g.norm_squared()).sum::<f64>() / suite.n() as f64;
    Ok(GroundTruth {
        x_star: x_star.as_slice().to_vec(),
        f_star: eval.value,
        sigma_star_sq,
        kappa: suite.smoothness() / suite.strong_convexity(),
        smoothness,
        strong_convexity,
        residual: eval.grad.norm(),
        fixed_point: None,
        numerical: false,
    })
}

/// Exact minimizer of `F` for a quadratic suite.
///
/// Each `grad F_i(x) = M_i (x - c_i)` with `M_i = (I + alpha A_i)^{-1} A_i`,
/// so `x*` solves `(sum M_i) x = sum M_i c_i`.
pub fn solve_ground_truth(suite: &TaskSuite, alpha: f64) -> Result<GroundTruth> {
    if !(alpha > 0.0) {
        return Err(MetaError::InvalidConstants(format!("alpha must be positive, got {alpha}")));
    }
    let parts = quadratic_parts(suite)?;
    let d = suite.dim();
    let mut lhs = Matrix::zeros(d, d);
    let mut rhs = Vector::zeros(d);
    let (mut l_f, mut mu_f) = (0.0f64, f64::INFINITY);
    for (a, c) in &parts {
        let m = envelope_hessian(a, alpha)?;
        let eig = SymmetricEigen::new(m.clone()).eigenvalues;
        l_f = l_f.max(eig.max());
        mu_f = mu_f.min(eig.min());
        rhs += &m * *c;
        lhs += m;
    }
    let x_star = solve_symmetric(lhs, &rhs, "sum of envelope Hessians")?;
    let mut truth = stats(suite, alpha, x_star, l_f, mu_f)?;
    if truth.residual > STATIONARITY_TOL {
        return Err(MetaError::SingularSystem(format!("residual {:e} after solve", truth.residual)));
    }
    truth.fixed_point = fo_maml_fixed_point(suite, alpha).ok().map(|v| v.as_slice().to_vec());
    Ok(truth)
}

/// Ground truth for a strongly convex suite without closed form: gradient
/// descent on `F` with step `1/L_F` until `|grad F| <= tol`.
pub fn numerical_ground_truth(suite: &TaskSuite, alpha: f64, tol: f64, max_iters: usize) -> Result<GroundTruth> {
    let (l, mu) = (suite.smoothness(), suite.strong_convexity());
    if suite.convexity() != Convexity::StronglyConvex {
        return Err(MetaError::RegimeViolation("numerical ground truth needs strongly convex tasks".into()));
    }
    let constants = envelope_constants(l, mu, alpha, Convexity::StronglyConvex)?;
    let step = 1.0 / constants.smoothness;
    let mut x = Vector::zeros(suite.dim());
    let mut converged = false;
    for _ in 0..max_iters {
        let eval = evaluate_suite(suite, &x, alpha)?;
        if eval.grad.norm() <= tol {
            converged = true;
            break;
        }
        x -= eval.grad * step;
    }
    if !converged {
        return Err(MetaError::InvalidConfig(format!("ground-truth descent did not reach |grad F| <= {tol:e}")));
    }
    let mut truth = stats(suite, alpha, x, constants.smoothness, constants.strong_convexity)?;
    truth.numerical = true;
    Ok(truth)
}

/// Closed-form ground truth for quadratic suites, numerical otherwise.
pub fn ground_truth(suite: &TaskSuite, alpha: f64) -> Result<GroundTruth> {
    if suite.is_quadratic() {
        solve_ground_truth(suite, alpha)
    } else {
        numerical_ground_truth(suite, alpha, 1e-12, 200_000)
    }
}

/// `P = 1/n sum A_i (I - alpha A_i)` and `q = 1/n sum A_i (I - alpha A_i) c_i`:
/// the full-batch FO-MAML direction is `P x - q`.
fn fo_maml_affine(suite: &TaskSuite, alpha: f64) -> Result<(Matrix, Vector)> {
    let parts = quadratic_parts(suite)?;
    let d = suite.dim();
    let n = suite.n() as f64;
    let mut p = Matrix::zeros(d, d);
    let mut q = Vector::zeros(d);
    for (a, c) in parts {
        let m = a * (Matrix::identity(d, d) - a * alpha);
        let m = (&m + m.transpose()) * 0.5;
        q += &m * c;
        p += m;
    }
    Ok((p / n, q / n))
}

/// Zero of the full-batch FO-MAML direction, which does not depend on `beta`.
pub fn fo_maml_fixed_point(suite: &TaskSuite, alpha: f64) -> Result<Vector> {
    let (p, q) = fo_maml_affine(suite, alpha)?;
    solve_symmetric(p, &q, "FO-MAML fixed-point system")
}

/// Fixed point of `x -> x - beta/n sum A_i ((I - alpha A_i) x + alpha A_i c_i - c_i)`,
/// after checking that the map is a contraction.
pub fn bias_fixed_point(suite: &TaskSuite, alpha: f64, beta: f64) -> Result<Vector> {
    let (p, _) = fo_maml_affine(suite, alpha)?;
    let eig = SymmetricEigen::new(p).eigenvalues;
    let radius = eig.iter().map(|&l| (1.0 - beta * l).abs()).fold(0.0, f64::max);
    if !(radius < 1.0) {
        return Err(MetaError::NonContraction(radius));
    }
    fo_maml_fixed_point(suite, alpha)
}

/// Upper estimate of `sup_x 1/n sum_i |grad F_i(x) - grad F(x)|^2`: the maximum
/// over the segment `x0 + t (x* - x0)`, `t` in `[-0.5, 1.5]`, and 20 Gaussian
/// probes of radius `|x0 - x*|` around `x*`, inflated by 2.
pub fn estimate_variance_bound(suite: &TaskSuite, alpha: f64, x0: &Vector, x_star: &Vector, seed: u64) -> Result<f64> {
    let mut points: Vec<Vector> = (0..21)
        .map(|j| {
            let t = -0.5 + 0.1 * j as f64;
            x0 + (x_star - x0) * t
        })
        .collect();
    let radius = (x0 - x_star).norm().max(1.0);
    let mut rng = rng::stream(seed, streams::PROBE);
    for _ in 0..20 {
        let dir = Vector::from_fn(suite.dim(), |_, _| StandardNormal.sample(&mut rng));
        let norm = dir.norm();
        if norm > 0.0 {
            points.push(x_star + dir * (radius / norm));
        }
    }
    let mut worst = 0.0f64;
    for x in &points {
        let eval = evaluate_suite(suite, x, alpha)?;
        let var = eval.task_grads.iter().map(|g| (g - &eval.grad).norm_squared()).sum::<f64>() / suite.n() as f64;
        worst = worst.max(var);
    }
    Ok(2.0 * worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::{make_logistic_suite, make_quadratic_suite, scalar_quadratic_suite};

    #[test]
    fn symmetric_pair_hand_solve() {
        let suite = scalar_quadratic_suite(&[1.0, 1.0], &[1.0, -1.0]).unwrap();
        for alpha in [0.1, 0.7, 3.0] {
            let gt = solve_ground_truth(&suite, alpha).unwrap();
            assert!(gt.x_star[0].abs() < 1e-15);
            let expected = 1.0 / (1.0 + alpha).powi(2);
            assert!((gt.sigma_star_sq - expected).abs() < 1e-14);
            assert!((gt.smoothness - 1.0 / (1.0 + alpha)).abs() < 1e-14);
        }
    }

    #[test]
    fn asymmetric_pair_oracle() {
        let suite = scalar_quadratic_suite(&[1.0, 2.0], &[0.0, 3.0]).unwrap();
        let gt = solve_ground_truth(&suite, 0.1).unwrap();
        // grad F_1 = x / 1.1, grad F_2 = 2 (x - 3) / 1.2
        let x_star = 5.0 / (1.0 / 1.1 + 2.0 / 1.2);
        assert!((gt.x_star[0] - x_star).abs() < 1e-14);
        assert!((gt.x_star[0] - 1.941_176).abs() < 1e-6);
        assert!((gt.fixed_point.unwrap()[0] - 1.92).abs() < 1e-14);
        let xf = bias_fixed_point(&suite, 0.05, 0.1).unwrap()[0];
        assert!((xf - 5.4 / 2.75).abs() < 1e-14);
    }

    #[test]
    fn zero_spread_has_no_variance() {
        let suite = make_quadratic_suite(5, 3, 0.5, 4.0, 0.0, 1).unwrap();
        let gt = solve_ground_truth(&suite, 0.2).unwrap();
        assert!(gt.sigma_star_sq < 1e-28);
        assert!(gt.x_star.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn residual_and_recomputation() {
        let suite = make_quadratic_suite(6, 4, 0.1, 10.0, 2.0, 5).unwrap();
        let gt = solve_ground_truth(&suite, 0.05).unwrap();
        assert!(gt.residual <= STATIONARITY_TOL);
        let eval = evaluate_suite(&suite, &gt.x_star(), 0.05).unwrap();
        let again = eval.task_grads.iter().map(|g| g.norm_squared()).sum::<f64>() / 6.0;
        assert!((again - gt.sigma_star_sq).abs() <= 1e-12 * gt.sigma_star_sq.max(1.0));
    }

    #[test]
    fn non_contraction_is_reported() {
        let suite = scalar_quadratic_suite(&[1.0, 2.0], &[0.0, 3.0]).unwrap();
        assert!(matches!(bias_fixed_point(&suite, 0.1, 2.0), Err(MetaError::NonContraction(_))));
    }

    #[test]
    fn logistic_needs_numerical_solve() {
        let suite = make_logistic_suite(3, 2, 10, 0.1, 4).unwrap();
        assert!(matches!(solve_ground_truth(&suite, 0.5), Err(MetaError::RequiresQuadratic)));
        let gt = ground_truth(&suite, 0.5).unwrap();
        assert!(gt.numerical && gt.residual <= 1e-12);
    }

    #[test]
    fn variance_bound_is_positive_for_spread_suite() {
        let suite = make_quadratic_suite(4, 2, 0.5, 2.0, 1.0, 8).unwrap();
        let gt = solve_ground_truth(&suite, 0.1).unwrap();
        let v = estimate_variance_bound(&suite, 0.1, &Vector::zeros(2), &gt.x_star(), 1).unwrap();
        assert!(v >= 2.0 * gt.sigma_star_sq);
    }
}
