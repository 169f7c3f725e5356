use alloc::string::String;

/// Errors raised by the wiretap-core numerics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("noise covariance {which} is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NonPositiveDefiniteNoise { which: &'static str, min_eigenvalue: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("perturbed gain matrix is numerically singular; alpha = {alpha:e} is too small")]
    SingularPerturbedGain { alpha: f64 },
    #[error("Loewner order violated: min eigenvalue of (upper - lower) is {0:e}")]
    OrderViolation(f64),
    #[error("invalid rate triple: {0}")]
    InvalidTriple(String),
    #[error("power budget exceeded: tr(K1 + K2) = {trace} > {budget}")]
    PowerExceeded { trace: f64, budget: f64 },
    #[error("common rate {r0_star} exceeds min(C_Y, C_Z) = {max}")]
    InfeasibleR0 { r0_star: f64, max: f64 },
    #[error("enhanced covariance is not positive definite (min eigenvalue {0:e})")]
    NonPositiveResult(f64),
    #[error("extremal inequality hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("oracle supports at most {max} transmit dimensions, got {dim}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = core::result::Result<T, Error>;
