use thiserror::Error;

/// Errors raised across the solver pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("empty support")]
    EmptySupport,
    #[error("zero total mass")]
    ZeroMass,
    #[error("invalid exponent p = {0} (need p >= 1)")]
    InvalidExponent(f64),
    #[error("kernel singularity: x = y")]
    KernelSingularity,
    #[error("negative value {value} at cell {cell}")]
    NegativeValue { cell: usize, value: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("eps = {0} out of range (0, 1]")]
    EpsOutOfRange(f64),
    #[error("grid too coarse: h = {h}, need h <= {needed}")]
    GridTooCoarse { h: f64, needed: f64 },
    #[error("grid too small: {0}")]
    GridTooSmall(String),
    #[error("support touches boundary")]
    SupportTouchesBoundary,
    #[error("not converged after {0} iterations")]
    NotConverged(usize),
    #[error("objective decreased at iteration {iter}: {before} -> {after}")]
    ObjectiveDecreased { iter: usize, before: f64, after: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("CFL violation: dt = {dt} exceeds h / (2 max|v|) = {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("degenerate time samples")]
    DegenerateSamples,
    #[error("duplicate or non-decreasing eps list")]
    BadEpsList,
    #[error("unknown profile: {0}")]
    UnknownProfile(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
