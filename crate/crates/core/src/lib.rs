//! First-order methods for minimizing an average of Moreau envelopes.
//!
//! Given task losses `f_1, ..., f_n` the library works with the meta-objective
//!
//! ```text
//! F(x) = 1/n * sum_i F_i(x),   F_i(x) = min_z { f_i(z) + |z - x|^2 / (2 alpha) }
//! ```
//!
//! and provides:
//!
//! * [`tasks`]: task-loss oracles and deterministic synthetic task suites,
//! * [`envelope`]: exact and inexact proximal points, envelope values and gradients,
//! * [`algorithms`]: FO-MAML, FO-MuML, exact-prox SGD and full gradient descent on `F`,
//! * [`theory`]: calculators for envelope constants and the convergence bounds,
//! * [`counterexamples`]: the one-dimensional iMAML landscapes,
//! * [`harness`]: ground truth, rate fitting, experiment configs and persistence.

pub mod algorithms;
pub mod counterexamples;
pub mod envelope;
mod error;
pub mod harness;
pub mod rng;
pub mod tasks;
pub mod theory;

pub use error::{MetaError, Result};

/// Dense column vector used for parameters and gradients.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used for quadratic task parameters.
pub type Matrix = nalgebra::DMatrix<f64>;
