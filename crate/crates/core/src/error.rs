use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid similarity map: {0}")]
    InvalidMap(String),

    #[error("invalid iterated function system: {0}")]
    InvalidSystem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not in the parabolic subgroup P: {0}")]
    NotParabolic(String),

    #[error("trajectory too long: matrix entries exceeded {limit:e} after {steps} steps")]
    TrajectoryTooLong { steps: usize, limit: f64 },

    #[error("lattice dimension {0} is outside the certified range (at most 6)")]
    UncertifiedDimension(usize),

    #[error("numerically singular lattice basis")]
    SingularBasis,

    #[error("invalid approximation function: {0}")]
    InvalidPsi(String),

    #[error("point {x} lies below the domain start {start}")]
    OutOfDomain { x: f64, start: f64 },

    #[error("non-monotone return times at position {0}")]
    NonMonotone(usize),

    #[error("window at level {0} was never visited")]
    NoData(f64),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("infeasible exponent budget: {0}")]
    InfeasibleBudget(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("invalid IFS description: {0}")]
    Schema(String),
}
