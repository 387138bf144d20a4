//! Error types shared across the crate.

/// Errors reported by the solver library.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A malformed argument: bad coefficients, index out of range, empty
    /// anchor list, nonpositive weight, and similar contract violations.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A point of the wrong dimension for the instance at hand.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The evaluation point coincides with anchor `index` (within the
    /// vertex-snap tolerance), where the objective is not differentiable.
    /// Use the vertex tests in [`crate::subdiff`] instead.
    #[error("point coincides with anchor {index}; the objective is not differentiable there")]
    AtVertex { index: usize },

    /// The requested operation is outside this module's scope.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A computation ran into a numerically degenerate configuration.
    #[error("numeric degeneracy: {0}")]
    NumericDegeneracy(String),
}

pub type Result<T> = std::result::Result<T, Error>;
