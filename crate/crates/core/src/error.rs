use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid cube: {0}")]
    InvalidCube(String),
    #[error("cube at level {0} has no children inside the domain")]
    LevelOverflow(u32),
    #[error("the root cube has no parent")]
    RootHasNoParent,
    #[error("no shifted dyadic cube inside the search window covers {0}")]
    NoCoverInWindow(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("domain mismatch between operands")]
    DomainMismatch,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid value {value} at cell {cell}: {reason}")]
    InvalidValue {
        cell: usize,
        value: f64,
        reason: &'static str,
    },
    #[error("weight has zero mass on {0}")]
    ZeroWeightMass(String),
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("all-lattice scope is too expensive for d={dim}, L={level}")]
    ScopeTooExpensive { dim: usize, level: u32 },
    #[error("collection is not {eta}-sparse: cube {cube} keeps only {fraction} of its volume; achievable eta is {achievable}")]
    NotEtaSparse {
        eta: f64,
        cube: String,
        fraction: f64,
        achievable: f64,
    },
    #[error("root average {average} exceeds the stopping height {height}")]
    RootExceedsHeight { average: f64, height: f64 },
    #[error("generator failure: {0}")]
    GeneratorFailure(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(message: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(message.into()))
}
