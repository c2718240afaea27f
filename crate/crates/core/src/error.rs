//! Crate-wide error type.

use alloc::string::String;

/// Errors reported by validation, construction, and numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Two inputs that must agree in shape do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A design column has zero Euclidean norm and cannot be standardized.
    #[error("design column {index} is identically zero and cannot be scaled to unit norm")]
    DegenerateColumn {
        /// Zero-based column index in the original design.
        index: usize,
    },
    /// Exhaustive support enumeration would exceed the configured guard.
    #[error("support enumeration would visit {count} sets, more than the limit of {limit}")]
    EnumerationTooLarge {
        /// Number of supports the request would enumerate (saturating).
        count: u64,
        /// The enumeration guard in force.
        limit: u64,
    },
    /// An internal quantity left its valid range; indicates inconsistent inputs.
    #[error("invalid state: {0}")]
    InvalidState(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
