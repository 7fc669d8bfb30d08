use thiserror::Error;

use crate::junction::JunctionTreeViolation;

/// Errors raised by constructors, projections, formulas and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid state space: {0}")]
    InvalidSpace(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("weights sum to {sum}, not 1")]
    NotNormalized { sum: f64 },

    #[error("invalid weight at index {index}: {value}")]
    InvalidWeight { index: usize, value: f64 },

    #[error("concentration parameter at index {index} must be positive, got {value}")]
    NonPositiveConcentration { index: usize, value: f64 },

    #[error("reference measure at index {index} must be positive, got {value}")]
    NonPositiveReference { index: usize, value: f64 },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid cylinder blocks: {0}")]
    InvalidCylinderBlocks(String),

    #[error("operands live on different state spaces")]
    SpaceMismatch,

    #[error("{what} index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("model undefined: {0}")]
    ModelUndefined(String),

    #[error("junction tree: {0}")]
    JunctionTree(#[from] JunctionTreeViolation),

    #[error("union of partition models must have at least one member")]
    EmptyUnion,

    #[error("divergence is infinite: p has mass at index {index} where the reference has none")]
    SupportViolation { index: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// True for failures that come from the numerics (poles, infinite
    /// divergences) rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::SupportViolation { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
