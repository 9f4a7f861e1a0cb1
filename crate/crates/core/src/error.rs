use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("support of size {size} exceeds the limit of {limit}")]
    SupportTooLarge { size: usize, limit: usize },
    #[error("conditioning event has zero probability")]
    EmptyConditioning,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{items} items exceed the limit of {limit} for exhaustive enumeration")]
    TooManyItems { items: usize, limit: usize },
    #[error("instance too large for the exact oracle: {0}")]
    TooLarge(String),
    #[error("operation requires an independent distribution given as marginals")]
    RequiresIndependence,
    #[error("operation requires a weakly correlated distribution")]
    RequiresWeaklyCorrelated,
    #[error("budget distribution does not have a monotone hazard rate")]
    NotMhr,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("linear program failed: {0}")]
    Lp(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
