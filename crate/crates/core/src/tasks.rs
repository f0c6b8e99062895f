//! Task-loss oracles and deterministic synthetic task suites.

use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{self, streams};
use crate::{Matrix, MetaError, Result, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convexity {
    StronglyConvex,
    Convex,
    Nonconvex,
}

impl Convexity {
    /// The weaker of two classes (nonconvex < convex < strongly convex).
    pub fn weakest(self, other: Convexity) -> Convexity {
        use Convexity::*;
        match (self, other) {
            (Nonconvex, _) | (_, Nonconvex) => Nonconvex,
            (Convex, _) | (_, Convex) => Convex,
            _ => StronglyConvex,
        }
    }
}

/// Closed-form description of a task loss.
#[derive(Clone, Debug, PartialEq)]
pub enum TaskModel {
    /// `f(z) = 1/2 (z - c)^T A (z - c)` with symmetric `A`.
    Quadratic { hessian: Matrix, center: Vector },
    /// `f(z) = 1/m sum_j log(1 + exp(-y_j a_j^T z)) + reg/2 |z|^2`, rows of
    /// `features` are the `a_j`, labels are +-1.
    Logistic {
        features: Matrix,
        labels: Vector,
        reg: f64,
    },
}

/// A differentiable task loss together with its declared constants.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskLoss {
    dim: usize,
    smoothness: f64,
    strong_convexity: f64,
    convexity: Convexity,
    model: TaskModel,
}

fn spectrum(a: &Matrix) -> (f64, f64) {
    let eig = SymmetricEigen::new(a.clone()).eigenvalues;
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn check_symmetric(a: &Matrix) -> Result<()> {
    if !a.is_square() {
        return Err(MetaError::InvalidDimension("quadratic hessian must be square".into()));
    }
    let scale = a.amax().max(1.0);
    if (a - a.transpose()).amax() > 1e-12 * scale {
        return Err(MetaError::InvalidConstants("quadratic hessian is not symmetric".into()));
    }
    Ok(())
}

impl TaskLoss {
    /// Quadratic task with constants read off the spectrum of `hessian`.
    pub fn quadratic(hessian: Matrix, center: Vector) -> Result<Self> {
        check_symmetric(&hessian)?;
        let (lo, hi) = spectrum(&hessian);
        let (mu, convexity) = if lo > 0.0 {
            (lo, Convexity::StronglyConvex)
        } else if lo >= 0.0 {
            (0.0, Convexity::Convex)
        } else {
            (0.0, Convexity::Nonconvex)
        };
        let smoothness = hi.max(-lo);
        if smoothness <= 0.0 {
            return Err(MetaError::InvalidConstants("zero hessian has no smoothness constant".into()));
        }
        Self::build_quadratic(hessian, center, mu, smoothness, convexity)
    }

    /// Quadratic task with declared `mu` and `l`; the spectrum of `hessian`
    /// must lie in `[mu, l]` up to round-off.
    pub fn quadratic_with_bounds(hessian: Matrix, center: Vector, mu: f64, l: f64) -> Result<Self> {
        if !(mu > 0.0) || l < mu {
            return Err(MetaError::InvalidConstants(format!("need 0 < mu <= L, got mu={mu}, L={l}")));
        }
        check_symmetric(&hessian)?;
        let (lo, hi) = spectrum(&hessian);
        let tol = 1e-9 * l.max(1.0);
        if lo < mu - tol || hi > l + tol {
            return Err(MetaError::InvalidConstants(format!(
                "spectrum [{lo}, {hi}] outside declared [{mu}, {l}]"
            )));
        }
        Self::build_quadratic(hessian, center, mu, l, Convexity::StronglyConvex)
    }

    fn build_quadratic(hessian: Matrix, center: Vector, mu: f64, l: f64, convexity: Convexity) -> Result<Self> {
        let dim = hessian.nrows();
        if dim == 0 {
            return Err(MetaError::InvalidDimension("d must be positive".into()));
        }
        if center.len() != dim {
            return Err(MetaError::DimensionMismatch { expected: dim, got: center.len() });
        }
        Ok(Self {
            dim,
            smoothness: l,
            strong_convexity: mu,
            convexity,
            model: TaskModel::Quadratic { hessian, center },
        })
    }

    /// One-dimensional quadratic `curvature/2 * (z - center)^2`.
    pub fn scalar_quadratic(curvature: f64, center: f64) -> Result<Self> {
        Self::quadratic(Matrix::from_element(1, 1, curvature), Vector::from_element(1, center))
    }

    /// Regularized logistic loss. The smoothness constant is
    /// `lambda_max(X^T X) / (4m) + reg` and the strong convexity constant is `reg`.
    pub fn logistic(features: Matrix, labels: Vector, reg: f64) -> Result<Self> {
        let (m, dim) = features.shape();
        if dim == 0 {
            return Err(MetaError::InvalidDimension("d must be positive".into()));
        }
        if m == 0 {
            return Err(MetaError::InvalidCount("need at least one sample".into()));
        }
        if labels.len() != m {
            return Err(MetaError::DimensionMismatch { expected: m, got: labels.len() });
        }
        if !(reg >= 0.0) {
            return Err(MetaError::InvalidConstants(format!("reg must be >= 0, got {reg}")));
        }
        let gram = features.transpose() * &features;
        let (_, top) = spectrum(&gram);
        let smoothness = 0.25 * top / m as f64 + reg;
        if smoothness <= 0.0 {
            return Err(MetaError::InvalidConstants("all-zero features with reg=0".into()));
        }
        let convexity = if reg > 0.0 { Convexity::StronglyConvex } else { Convexity::Convex };
        Ok(Self {
            dim,
            smoothness,
            strong_convexity: reg,
            convexity,
            model: TaskModel::Logistic { features, labels, reg },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Smoothness constant `L`.
    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    /// Strong convexity constant `mu` (0 unless strongly convex).
    pub fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    pub fn convexity(&self) -> Convexity {
        self.convexity
    }

    pub fn model(&self) -> &TaskModel {
        &self.model
    }

    /// `(A, c)` for quadratic tasks.
    pub fn quadratic_parts(&self) -> Option<(&Matrix, &Vector)> {
        match &self.model {
            TaskModel::Quadratic { hessian, center } => Some((hessian, center)),
            _ => None,
        }
    }

    /// A minimizer when one is known in closed form.
    pub fn minimizer(&self) -> Option<&Vector> {
        match &self.model {
            TaskModel::Quadratic { center, .. } if self.convexity == Convexity::StronglyConvex => Some(center),
            _ => None,
        }
    }

    fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim {
            return Err(MetaError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match &self.model {
            TaskModel::Quadratic { hessian, center } => {
                let r = x - center;
                0.5 * r.dot(&(hessian * &r))
            }
            TaskModel::Logistic { features, labels, reg } => {
                let margins = features * x;
                let m = labels.len() as f64;
                let loss: f64 = margins
                    .iter()
                    .zip(labels.iter())
                    .map(|(&t, &y)| softplus(-y * t))
                    .sum();
                loss / m + 0.5 * reg * x.norm_squared()
            }
        })
    }

    pub fn grad(&self, x: &Vector) -> Result<Vector> {
        self.check_dim(x)?;
        Ok(match &self.model {
            TaskModel::Quadratic { hessian, center } => hessian * (x - center),
            TaskModel::Logistic { features, labels, reg } => {
                let margins = features * x;
                let m = labels.len() as f64;
                let weights = Vector::from_iterator(
                    labels.len(),
                    margins.iter().zip(labels.iter()).map(|(&t, &y)| -y * sigmoid(-y * t) / m),
                );
                features.transpose() * weights + x * *reg
            }
        })
    }
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Everything needed to regenerate a suite. Suites are never stored raw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SuiteDescriptor {
    Quadratic {
        n: usize,
        d: usize,
        mu: f64,
        #[serde(rename = "L")]
        l: f64,
        spread: f64,
        seed: u64,
    },
    Logistic {
        n: usize,
        d: usize,
        samples_per_task: usize,
        reg: f64,
        seed: u64,
    },
    /// Diagonal quadratics given entry by entry: task `i` is
    /// `1/2 sum_j curvatures[i][j] (z_j - centers[i][j])^2`.
    ExplicitQuadratic {
        curvatures: Vec<Vec<f64>>,
        centers: Vec<Vec<f64>>,
    },
}

impl SuiteDescriptor {
    pub fn build(&self) -> Result<TaskSuite> {
        match *self {
            SuiteDescriptor::Quadratic { n, d, mu, l, spread, seed } => make_quadratic_suite(n, d, mu, l, spread, seed),
            SuiteDescriptor::Logistic { n, d, samples_per_task, reg, seed } => {
                make_logistic_suite(n, d, samples_per_task, reg, seed)
            }
            SuiteDescriptor::ExplicitQuadratic { ref curvatures, ref centers } => {
                make_explicit_suite(curvatures.clone(), centers.clone())
            }
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match *self {
            SuiteDescriptor::Quadratic { seed, .. } | SuiteDescriptor::Logistic { seed, .. } => Some(seed),
            SuiteDescriptor::ExplicitQuadratic { .. } => None,
        }
    }
}

/// An ordered, immutable collection of task losses sharing one dimension.
#[derive(Clone, Debug)]
pub struct TaskSuite {
    tasks: Vec<TaskLoss>,
    descriptor: Option<SuiteDescriptor>,
}

impl TaskSuite {
    /// Suite from hand-built tasks; it carries no descriptor.
    pub fn from_tasks(tasks: Vec<TaskLoss>) -> Result<Self> {
        let first = tasks
            .first()
            .ok_or_else(|| MetaError::InvalidCount("a suite needs at least one task".into()))?;
        let d = first.dim();
        if let Some(bad) = tasks.iter().find(|t| t.dim() != d) {
            return Err(MetaError::DimensionMismatch { expected: d, got: bad.dim() });
        }
        Ok(Self { tasks, descriptor: None })
    }

    fn with_descriptor(tasks: Vec<TaskLoss>, descriptor: SuiteDescriptor) -> Result<Self> {
        let mut suite = Self::from_tasks(tasks)?;
        suite.descriptor = Some(descriptor);
        Ok(suite)
    }

    pub fn tasks(&self) -> &[TaskLoss] {
        &self.tasks
    }

    pub fn task(&self, i: usize) -> &TaskLoss {
        &self.tasks[i]
    }

    pub fn n(&self) -> usize {
        self.tasks.len()
    }

    pub fn dim(&self) -> usize {
        self.tasks[0].dim()
    }

    pub fn descriptor(&self) -> Option<&SuiteDescriptor> {
        self.descriptor.as_ref()
    }

    /// Largest task smoothness constant.
    pub fn smoothness(&self) -> f64 {
        self.tasks.iter().map(TaskLoss::smoothness).fold(0.0, f64::max)
    }

    /// Smallest task strong convexity constant.
    pub fn strong_convexity(&self) -> f64 {
        self.tasks.iter().map(TaskLoss::strong_convexity).fold(f64::INFINITY, f64::min)
    }

    pub fn convexity(&self) -> Convexity {
        self.tasks
            .iter()
            .map(TaskLoss::convexity)
            .fold(Convexity::StronglyConvex, Convexity::weakest)
    }

    pub fn is_quadratic(&self) -> bool {
        self.tasks.iter().all(|t| t.quadratic_parts().is_some())
    }
}

fn random_orthogonal<R: Rng>(rng: &mut R, d: usize) -> Matrix {
    let g = Matrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Strongly convex quadratics `1/2 (z - c_i)^T A_i (z - c_i)`.
///
/// Eigenvalues are log-uniform in `[mu, l]` with both endpoints forced when
/// `d >= 2`, conjugated by a random orthogonal matrix. Centers are Gaussian
/// with `E|c_i|^2 = spread^2`. Task `i` draws from stream `TASK_BASE + i`.
pub fn make_quadratic_suite(n: usize, d: usize, mu: f64, l: f64, spread: f64, seed: u64) -> Result<TaskSuite> {
    if !(mu > 0.0) || !(l >= mu) || !l.is_finite() {
        return Err(MetaError::InvalidConstants(format!("need 0 < mu <= L, got mu={mu}, L={l}")));
    }
    if d == 0 {
        return Err(MetaError::InvalidDimension("d must be positive".into()));
    }
    if n == 0 {
        return Err(MetaError::InvalidCount("n must be positive".into()));
    }
    if !(spread >= 0.0) {
        return Err(MetaError::InvalidConstants(format!("spread must be >= 0, got {spread}")));
    }
    let (log_lo, log_hi) = (mu.ln(), l.ln());
    let tasks = (0..n)
        .map(|i| {
            let mut rng = rng::stream(seed, streams::TASK_BASE + i as u64);
            let mut eig: Vec<f64> = (0..d)
                .map(|_| {
                    let u: f64 = rng.random();
                    (log_lo + u * (log_hi - log_lo)).exp().clamp(mu, l)
                })
                .collect();
            if d >= 2 {
                eig[0] = mu;
                eig[1] = l;
            }
            let q = random_orthogonal(&mut rng, d);
            let a = &q * Matrix::from_diagonal(&Vector::from_vec(eig)) * q.transpose();
            let a = (&a + a.transpose()) * 0.5;
            let scale = spread / (d as f64).sqrt();
            let center = Vector::from_fn(d, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
            TaskLoss::quadratic_with_bounds(a, center, mu, l)
        })
        .collect::<Result<Vec<_>>>()?;
    TaskSuite::with_descriptor(tasks, SuiteDescriptor::Quadratic { n, d, mu, l, spread, seed })
}

/// Regularized logistic regression tasks on synthetic data.
///
/// Each task has its own Gaussian weight vector `w_i`; features are standard
/// Gaussian and labels are `sign(a^T w_i + 0.1 * noise)`.
pub fn make_logistic_suite(n: usize, d: usize, samples_per_task: usize, reg: f64, seed: u64) -> Result<TaskSuite> {
    if d == 0 {
        return Err(MetaError::InvalidDimension("d must be positive".into()));
    }
    if n == 0 || samples_per_task == 0 {
        return Err(MetaError::InvalidCount("n and samples_per_task must be positive".into()));
    }
    let tasks = (0..n)
        .map(|i| {
            let mut rng = rng::stream(seed, streams::TASK_BASE + i as u64);
            let w = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let features = Matrix::from_fn(samples_per_task, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let labels = Vector::from_fn(samples_per_task, |j, _| {
                let noise: f64 = rng.sample(StandardNormal);
                if features.row(j).transpose().dot(&w) + 0.1 * noise >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            });
            TaskLoss::logistic(features, labels, reg)
        })
        .collect::<Result<Vec<_>>>()?;
    TaskSuite::with_descriptor(tasks, SuiteDescriptor::Logistic { n, d, samples_per_task, reg, seed })
}

fn make_explicit_suite(curvatures: Vec<Vec<f64>>, centers: Vec<Vec<f64>>) -> Result<TaskSuite> {
    if curvatures.len() != centers.len() {
        return Err(MetaError::InvalidCount("curvatures and centers must list the same tasks".into()));
    }
    let tasks = curvatures
        .iter()
        .zip(&centers)
        .map(|(k, c)| {
            if k.len() != c.len() {
                return Err(MetaError::DimensionMismatch { expected: k.len(), got: c.len() });
            }
            TaskLoss::quadratic(
                Matrix::from_diagonal(&Vector::from_column_slice(k)),
                Vector::from_column_slice(c),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    TaskSuite::with_descriptor(tasks, SuiteDescriptor::ExplicitQuadratic { curvatures, centers })
}

/// Convenience for one-dimensional quadratic suites `{k_i/2 (z - c_i)^2}`.
pub fn scalar_quadratic_suite(curvatures: &[f64], centers: &[f64]) -> Result<TaskSuite> {
    make_explicit_suite(
        curvatures.iter().map(|&k| vec![k]).collect(),
        centers.iter().map(|&c| vec![c]).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_quadratic_generator() {
        let suite = make_quadratic_suite(1, 1, 1.0, 1.0, 0.0, 99).unwrap();
        let t = suite.task(0);
        let x = Vector::from_element(1, 2.0);
        assert_eq!(t.value(&x).unwrap(), 2.0);
        assert_eq!(t.grad(&x).unwrap()[0], 2.0);
    }

    #[test]
    fn determinism_in_seed() {
        let a = make_quadratic_suite(2, 1, 1.0, 1.0, 1.0, 5).unwrap();
        let b = make_quadratic_suite(2, 1, 1.0, 1.0, 1.0, 5).unwrap();
        let c = make_quadratic_suite(2, 1, 1.0, 1.0, 1.0, 6).unwrap();
        assert_eq!(a.tasks(), b.tasks());
        assert_ne!(a.tasks(), c.tasks());
        let c0 = a.task(0).quadratic_parts().unwrap().1[0];
        let c1 = a.task(1).quadratic_parts().unwrap().1[0];
        assert_ne!(c0, c1);
    }

    #[test]
    fn invalid_constants_and_dimension() {
        assert!(matches!(make_quadratic_suite(1, 1, 0.0, 1.0, 0.0, 0), Err(MetaError::InvalidConstants(_))));
        assert!(matches!(make_quadratic_suite(1, 1, 2.0, 1.0, 0.0, 0), Err(MetaError::InvalidConstants(_))));
        assert!(matches!(make_quadratic_suite(1, 0, 1.0, 1.0, 0.0, 0), Err(MetaError::InvalidDimension(_))));
        assert!(matches!(make_logistic_suite(1, 0, 5, 0.0, 0), Err(MetaError::InvalidDimension(_))));
        assert!(matches!(make_logistic_suite(1, 2, 0, 0.0, 0), Err(MetaError::InvalidCount(_))));
    }

    #[test]
    fn hand_quadratics() {
        let t = TaskLoss::scalar_quadratic(1.0, 0.0).unwrap();
        let x = Vector::from_element(1, 2.0);
        assert_eq!(t.value(&x).unwrap(), 2.0);
        assert_eq!(t.grad(&x).unwrap()[0], 2.0);
        let t = TaskLoss::scalar_quadratic(1.0, 1.0).unwrap();
        assert_eq!(t.grad(&Vector::from_element(1, 1.0)).unwrap()[0], 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let t = TaskLoss::scalar_quadratic(1.0, 0.0).unwrap();
        let err = t.grad(&Vector::zeros(2)).unwrap_err();
        assert!(matches!(err, MetaError::DimensionMismatch { expected: 1, got: 2 }));
        assert!(t.value(&Vector::zeros(3)).is_err());
    }

    #[test]
    fn logistic_classes() {
        let s = make_logistic_suite(2, 3, 10, 0.0, 1).unwrap();
        assert_eq!(s.convexity(), Convexity::Convex);
        assert_eq!(s.strong_convexity(), 0.0);
        let s = make_logistic_suite(2, 3, 10, 0.01, 1).unwrap();
        assert_eq!(s.convexity(), Convexity::StronglyConvex);
        assert_eq!(s.strong_convexity(), 0.01);
        assert!(s.smoothness() >= 0.01);
    }

    #[test]
    fn quadratic_classification_from_spectrum() {
        let t = TaskLoss::quadratic(Matrix::from_diagonal(&Vector::from_vec(vec![0.0, 2.0])), Vector::zeros(2)).unwrap();
        assert_eq!(t.convexity(), Convexity::Convex);
        assert_eq!(t.smoothness(), 2.0);
        let t = TaskLoss::quadratic(Matrix::from_diagonal(&Vector::from_vec(vec![-3.0, 2.0])), Vector::zeros(2)).unwrap();
        assert_eq!(t.convexity(), Convexity::Nonconvex);
        assert_eq!(t.smoothness(), 3.0);
        let asym = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(TaskLoss::quadratic(asym, Vector::zeros(2)).is_err());
    }

    #[test]
    fn descriptor_toml_round_trip() {
        let d = SuiteDescriptor::Quadratic { n: 3, d: 2, mu: 0.5, l: 4.0, spread: 1.0, seed: 11 };
        let text = toml::to_string(&d).unwrap();
        assert!(text.contains("family = \"quadratic\""));
        assert!(text.contains("L = 4.0"));
        let back: SuiteDescriptor = toml::from_str(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.build().unwrap().tasks(), d.build().unwrap().tasks());
    }
}
