use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid size {0}: must be a power of two and at least 8")]
    InvalidGridSize(usize),

    #[error("grid size mismatch: expected {expected}, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("grid function does not have zero mean (mean = {0:e})")]
    NonZeroMean(f64),

    #[error("invalid sigma model: {0}")]
    InvalidSigma(String),

    #[error("sigma violates the positivity floor: min sigma = {0}")]
    PositivityFloor(f64),

    #[error("invalid interval [{0}, {1}]")]
    InvalidInterval(f64, f64),

    #[error("invalid flow parameter `{field}`: {reason}")]
    InvalidFlowParams { field: &'static str, reason: String },

    #[error("time step {dt:e} violates the stability bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("non-finite solution at t = {t}")]
    BlowUp { t: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("state is not a critical point of the energy: {0}")]
    NotCritical(String),

    #[error("trajectory does not converge: {0}")]
    NotConvergent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
