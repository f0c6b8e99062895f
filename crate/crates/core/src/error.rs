use thiserror::Error;

pub type Result<T> = std::result::Result<T, MetaError>;

#[derive(Debug, Error)]
pub enum MetaError {
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid count: {0}")]
    InvalidCount(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("task has no closed-form proximal operator")]
    NotClosedForm,
    #[error("fixed-point iteration diverged at step {step} (norm {norm:e})")]
    Divergence { step: usize, norm: f64 },
    #[error("inexact prox could not certify delta={delta:e} within {steps} steps (best relative error {best:e})")]
    CertificationFailed { delta: f64, steps: usize, best: f64 },
    #[error("outer loop diverged at iteration {iteration} (norm {norm:e})")]
    OuterDivergence { iteration: usize, norm: f64 },
    #[error("regime violation: {0}")]
    RegimeViolation(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("fixed-point map is not a contraction (spectral radius {0})")]
    NonContraction(f64),
    #[error("no pre-plateau segment to fit")]
    InsufficientDecay,
    #[error("root bracketing failed for x={0}")]
    BracketFailure(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("requires a quadratic task suite")]
    RequiresQuadratic,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("toml: {0}")]
    Toml(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
