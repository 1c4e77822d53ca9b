use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("n must be ≥ 1")]
    ZeroDimension,
    #[error("vector length {got} does not match dimension {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    /// A counted coordinate has a non-positive gap (`|d_j| ≥ √(cn)`).
    #[error("gap breach at coordinate {index} (d = {d})")]
    Breach { index: usize, d: i64 },
    #[error("gap {gap} outside the class range (0, {cn}]")]
    GapOutOfRange { gap: f64, cn: f64 },
    #[error("{what} = {got} exceeds the enumeration cap {cap}; use sampling instead")]
    TooLarge {
        what: &'static str,
        got: usize,
        cap: usize,
    },
    #[error("weights must be non-empty")]
    EmptyWeights,
    #[error("weight {index} has |a| = {value} < 1")]
    WeightTooSmall { index: usize, value: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
