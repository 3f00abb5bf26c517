use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("non-finite value at node {node}")]
    NonFiniteValue { node: usize },
    #[error("extrapolation beyond grid end: y = {y} > y_max = {y_max}")]
    Extrapolation { y: f64, y_max: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("kernel constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("singular integrand near y0: local exponent {exponent} <= -1")]
    SingularIntegrand { exponent: f64 },
    #[error("kernel class mismatch: expected {expected}, got {found}")]
    ClassMismatch { expected: String, found: String },
    #[error("operation requires a {expected} grid")]
    GridKind { expected: &'static str },
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },
    #[error("invalid initialization: {0}")]
    InvalidInitialization(String),
    #[error("overflow guard tripped: {0}")]
    Overflow(String),
    #[error("time step {dt:e} exceeds stability bound {bound:e}")]
    StabilityViolation { dt: f64, bound: f64 },
    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),
    #[error("divergent finite-part pairing (local exponent {exponent})")]
    Divergent { exponent: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
