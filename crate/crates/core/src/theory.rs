//! Closed-form constants and convergence bounds.
//!
//! Everything here is a pure function of scalar problem constants. Bounds are
//! reported in their native units: squared distance to `x*` for the strongly
//! convex results, squared gradient norm of `F` for the nonconvex one.

use serde::{Deserialize, Serialize};

use crate::tasks::Convexity;
use crate::{MetaError, Result};

/// Smoothness and strong convexity of an envelope `F_i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeConstants {
    pub smoothness: f64,
    pub strong_convexity: f64,
    /// `1/alpha`, valid for any convex task regardless of `L`.
    pub prox_smoothness: f64,
}

/// Envelope constants for an `L`-smooth task of the given class:
///
/// * nonconvex (needs `alpha L < 1`): `L / (1 - alpha L)`,
/// * convex: `L / (1 + alpha L)`,
/// * `mu`-strongly convex: additionally `mu / (1 + alpha mu)`.
pub fn envelope_constants(l: f64, mu: f64, alpha: f64, class: Convexity) -> Result<EnvelopeConstants> {
    if !(alpha > 0.0) || !(l > 0.0) {
        return Err(MetaError::InvalidConstants(format!("need alpha > 0 and L > 0, got alpha={alpha}, L={l}")));
    }
    let prox_smoothness = 1.0 / alpha;
    Ok(match class {
        Convexity::Nonconvex => {
            if alpha * l >= 1.0 {
                return Err(MetaError::RegimeViolation(format!("nonconvex envelope needs alpha*L < 1, got {}", alpha * l)));
            }
            EnvelopeConstants { smoothness: l / (1.0 - alpha * l), strong_convexity: 0.0, prox_smoothness }
        }
        Convexity::Convex => EnvelopeConstants { smoothness: l / (1.0 + alpha * l), strong_convexity: 0.0, prox_smoothness },
        Convexity::StronglyConvex => EnvelopeConstants {
            smoothness: l / (1.0 + alpha * l),
            strong_convexity: mu / (1.0 + alpha * mu),
            prox_smoothness,
        },
    })
}

/// `(alpha L)^(s+1)`: relative error of `grad f(z_s)` after `s` fixed-point steps.
pub fn inner_error_bound(alpha: f64, l: f64, s: u32) -> f64 {
    (alpha * l).powi(s as i32 + 1)
}

/// `(gamma L)^s + |alpha - gamma| L`: relative error bound when the inner
/// loop uses step `gamma` instead of `alpha`.
pub fn mismatched_step_bound(alpha: f64, gamma: f64, l: f64, s: u32) -> f64 {
    (gamma * l).powi(s as i32) + (alpha - gamma).abs() * l
}

/// Identifier of a convergence bound. The serialized names are the ones used
/// on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundId {
    /// FO-MAML analysed as inexact SGD.
    #[serde(rename = "thm41")]
    FoMamlInexactSgd,
    /// Inexact SGD with a relative `delta`-oracle.
    #[serde(rename = "thm42")]
    InexactOracleSgd,
    /// Virtual-iterate analysis, strongly convex.
    #[serde(rename = "thm54")]
    PerturbedIterate,
    /// Virtual-iterate analysis, nonconvex.
    #[serde(rename = "thm56")]
    Nonconvex,
}

impl BoundId {
    pub const ALL: [BoundId; 4] = [
        BoundId::FoMamlInexactSgd,
        BoundId::InexactOracleSgd,
        BoundId::PerturbedIterate,
        BoundId::Nonconvex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundId::FoMamlInexactSgd => "thm41",
            BoundId::InexactOracleSgd => "thm42",
            BoundId::PerturbedIterate => "thm54",
            BoundId::Nonconvex => "thm56",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn units(self) -> Units {
        match self {
            BoundId::Nonconvex => Units::SquaredGradNorm,
            _ => Units::SquaredDistance,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Units {
    SquaredDistance,
    SquaredGradNorm,
}

/// `E|x^k - x*|^2 <= factor^k |x^0 - x*|^2 + radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearRate {
    pub bound: BoundId,
    pub precondition_satisfied: bool,
    pub factor: f64,
    pub radius: f64,
    pub units: Units,
}

impl LinearRate {
    pub fn at(&self, k: usize, initial_dist_sq: f64) -> f64 {
        self.factor.powi(k as i32) * initial_dist_sq + self.radius
    }
}

/// Largest `alpha` allowed by the FO-MAML inexact-SGD result: `1/(4 sqrt(kappa) L)`.
pub fn fo_maml_alpha_max(l: f64, mu: f64) -> f64 {
    1.0 / (4.0 * (l / mu).sqrt() * l)
}

/// Largest oracle accuracy allowed by the inexact-oracle result: `1/(4 sqrt(kappa))`.
pub fn oracle_delta_max(l: f64, mu: f64) -> f64 {
    1.0 / (4.0 * (l / mu).sqrt())
}

/// Largest `alpha` allowed by the virtual-iterate result: `1/(sqrt(6) L)`.
pub fn perturbed_alpha_max(l: f64) -> f64 {
    1.0 / (6f64.sqrt() * l)
}

/// FO-MAML as inexact SGD: factor `1 - beta mu / 4`, radius
/// `16/mu (2 alpha^2 L^2 / mu + beta/tau + beta) sigma*^2`.
/// Requires `beta <= 1/(20L)` and `alpha <= 1/(4 sqrt(kappa) L)`.
pub fn fo_maml_sgd_rate(l: f64, mu: f64, alpha: f64, beta: f64, tau: usize, sigma_star_sq: f64) -> LinearRate {
    let tau = tau as f64;
    let ok = beta <= 1.0 / (20.0 * l) && alpha <= fo_maml_alpha_max(l, mu);
    LinearRate {
        bound: BoundId::FoMamlInexactSgd,
        precondition_satisfied: ok,
        factor: 1.0 - beta * mu / 4.0,
        radius: 16.0 / mu * (2.0 * alpha * alpha * l * l / mu + beta / tau + beta) * sigma_star_sq,
        units: Units::SquaredDistance,
    }
}

/// Inexact SGD with a `delta`-oracle: factor `1 - beta mu / 4`, radius
/// `16/mu (2 delta^2 / mu + beta/tau + beta delta^2) sigma*^2`.
/// Requires `alpha <= 1/L`, `beta <= 1/(20L)` and `delta <= 1/(4 sqrt(kappa))`.
pub fn inexact_oracle_sgd_rate(
    l: f64,
    mu: f64,
    alpha: f64,
    beta: f64,
    tau: usize,
    delta: f64,
    sigma_star_sq: f64,
) -> LinearRate {
    let tau = tau as f64;
    let d2 = delta * delta;
    let ok = alpha <= 1.0 / l && beta <= 1.0 / (20.0 * l) && delta <= oracle_delta_max(l, mu);
    LinearRate {
        bound: BoundId::InexactOracleSgd,
        precondition_satisfied: ok,
        factor: 1.0 - beta * mu / 4.0,
        radius: 16.0 / mu * (2.0 * d2 / mu + beta / tau + beta * d2) * sigma_star_sq,
        units: Units::SquaredDistance,
    }
}

/// Virtual-iterate analysis: factor `1 - beta mu / 12`, radius
/// `6 (beta/tau + 3 delta^2 alpha^2 L) sigma*^2 / mu`.
/// Requires `alpha <= 1/(sqrt(6) L)` and `beta <= tau/(4L)`. FO-MAML is `delta = alpha L`.
pub fn perturbed_iterate_rate(
    l: f64,
    mu: f64,
    alpha: f64,
    beta: f64,
    tau: usize,
    delta: f64,
    sigma_star_sq: f64,
) -> LinearRate {
    let tau = tau as f64;
    let ok = alpha <= perturbed_alpha_max(l) && beta <= tau / (4.0 * l);
    LinearRate {
        bound: BoundId::PerturbedIterate,
        precondition_satisfied: ok,
        factor: 1.0 - beta * mu / 12.0,
        radius: 6.0 * (beta / tau + 3.0 * delta * delta * alpha * alpha * l) * sigma_star_sq / mu,
        units: Units::SquaredDistance,
    }
}

/// Bound on `min_{t <= k} E|grad F(x^t)|^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityBound {
    pub precondition_satisfied: bool,
    /// Full bound at the requested `k`.
    pub value: f64,
    /// `k`-independent part (the neighborhood size).
    pub floor: f64,
}

/// `4 (F(x^0) - F*) / (beta k) + 4 (alpha L)^2 delta^2 sigma^2
///  + 32 beta (alpha L)^2 (1/tau + (alpha L)^2 delta^2) sigma^2`.
/// Requires `alpha <= 1/(4L)` and `beta <= 1/(16L)`.
#[allow(clippy::too_many_arguments)]
pub fn nonconvex_stationarity_bound(
    l: f64,
    alpha: f64,
    beta: f64,
    tau: usize,
    delta: f64,
    sigma_sq: f64,
    initial_gap: f64,
    k: usize,
) -> StationarityBound {
    let al2 = (alpha * l).powi(2);
    let d2 = delta * delta;
    let floor = 4.0 * al2 * d2 * sigma_sq + 32.0 * beta * al2 * (1.0 / tau as f64 + al2 * d2) * sigma_sq;
    let decay = if k == 0 { f64::INFINITY } else { 4.0 * initial_gap / (beta * k as f64) };
    StationarityBound {
        precondition_satisfied: alpha <= 1.0 / (4.0 * l) && beta <= 1.0 / (16.0 * l),
        value: decay + floor,
        floor,
    }
}

/// Inputs shared by all calculators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    #[serde(rename = "L")]
    pub l: f64,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub tau: usize,
    pub class: Convexity,
    /// Oracle accuracy; `alpha L` for FO-MAML.
    pub delta: f64,
    pub sigma_star_sq: f64,
    /// Uniform variance bound (nonconvex result); `None` if not estimated.
    pub sigma_sq: Option<f64>,
    /// `F(x^0) - F*`; `None` if unknown.
    pub initial_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub inputs: TheoryInputs,
    pub kappa: f64,
    pub envelope: Option<EnvelopeConstants>,
    pub rates: Vec<LinearRate>,
    /// Stationarity bound floor (`k -> infinity`) when `sigma_sq` is known.
    pub stationarity_floor: Option<f64>,
    pub stationarity_precondition_satisfied: bool,
}

impl TheoryReport {
    pub fn new(inputs: TheoryInputs) -> Self {
        let TheoryInputs { l, mu, alpha, beta, tau, class, delta, sigma_star_sq, sigma_sq, .. } = inputs;
        let kappa = if mu > 0.0 { l / mu } else { f64::INFINITY };
        let envelope = envelope_constants(l, mu, alpha, class).ok();
        let rates = if mu > 0.0 {
            vec![
                fo_maml_sgd_rate(l, mu, alpha, beta, tau, sigma_star_sq),
                inexact_oracle_sgd_rate(l, mu, alpha, beta, tau, delta, sigma_star_sq),
                perturbed_iterate_rate(l, mu, alpha, beta, tau, delta, sigma_star_sq),
            ]
        } else {
            Vec::new()
        };
        let stationarity = nonconvex_stationarity_bound(l, alpha, beta, tau, delta, sigma_sq.unwrap_or(0.0), 0.0, 1);
        Self {
            inputs,
            kappa,
            envelope,
            rates,
            stationarity_floor: sigma_sq.map(|_| stationarity.floor),
            stationarity_precondition_satisfied: stationarity.precondition_satisfied,
        }
    }

    pub fn rate(&self, id: BoundId) -> Option<&LinearRate> {
        self.rates.iter().find(|r| r.bound == id)
    }
}
