//! Crate-wide error type.

/// Errors shared by every module in the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A function was evaluated outside its mathematical domain.
    #[error("out of domain: {0}")]
    Domain(String),

    /// The path has no zero in (0, T]; the caller is expected to resample.
    #[error("path has no zero crossing in (0, T]")]
    NoZeroCrossing,

    /// Local-time binning cannot resolve the path values.
    #[error("degenerate binning: {0}")]
    DegenerateBinning(String),

    /// The request exceeds the configured step or memory budget.
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),

    /// Too few usable data points for the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
