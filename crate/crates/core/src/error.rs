use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("rejection sampling exhausted {attempts} attempts without hitting the region")]
    RegionMassZero { attempts: usize },

    #[error("rectangle has zero mass")]
    ZeroMassRectangle,

    #[error("ball has zero mass under the distribution")]
    ZeroMassBall,

    #[error("insufficient data: need more than {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("no audited region reached {k} validation points")]
    InsufficientCoverage { k: usize },

    #[error("exact loss oracle unavailable")]
    OracleUnavailable,

    #[error("parameter out of range: {constraint}")]
    ParameterOutOfRange { constraint: String },

    #[error("points {first} and {second} share a sub-rectangle but carry different labels")]
    InconsistentLabels { first: usize, second: usize },

    #[error("point {index} lies outside every rectangle but is labelled -1")]
    OutsideLabelViolation { index: usize },

    #[error("point is not covered by any cell of the explainer")]
    NotCovered,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn param(constraint: impl Into<String>) -> Self {
        Error::ParameterOutOfRange { constraint: constraint.into() }
    }
}
