use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("kernel weights sum to {sum}, expected 1 within 1e-12")]
    NonUnitMass { sum: f64 },
    #[error("negative weight {weight} at offset {offset:?}")]
    NegativeWeight { offset: Vec<i64>, weight: f64 },
    #[error("kernel support contains the zero offset")]
    ZeroOffset,
    #[error("offset {offset:?} appears more than once")]
    DuplicateOffset { offset: Vec<i64> },
    #[error("kernel has no entries")]
    EmptyKernel,
    #[error("offset {offset:?} has {got} components, expected {expected}")]
    OffsetArity { offset: Vec<i64>, expected: usize, got: usize },
    #[error("kernel is not symmetric; asymmetric kernels require the explicit bypass")]
    AsymmetricKernel,
    #[error("dimension {0} is not supported (1, 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("truncated Gaussian kernel has no mass off the origin")]
    DegenerateTruncation,
    #[error("kernel dimension {kernel} does not match lattice dimension {lattice}")]
    DimensionMismatch { kernel: usize, lattice: usize },
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("empty grid")]
    EmptyGrid,
    #[error("need at least {needed} usable time points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("torus saturated: {0}")]
    TorusSaturated(String),
    #[error("Green function at lambda = 0 requires kappa > 0")]
    ZeroMobility,
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("recovery rate gamma must be positive")]
    ZeroRecovery,
    #[error("invalid rates: {0}")]
    InvalidRates(String),
    #[error("ODE integration failed: {0}")]
    IntegratorFailure(String),
    #[error("time quadrature did not converge within {nodes} nodes (last relative change {change:e})")]
    QuadratureStall { nodes: usize, change: f64 },
    #[error("pair system with {pairs} pairs exceeds the limit of {limit}")]
    SystemTooLarge { pairs: usize, limit: usize },
    #[error("separation must be nonzero")]
    ZeroSeparation,
    #[error("first moment {value:e} at the evaluation site is too small to form a ratio")]
    VanishingMean { value: f64 },
    #[error("initial density {0} is not a nonnegative integer")]
    NonIntegerDensity(f64),
    #[error("no event has positive rate")]
    Extinct,
    #[error("event budget of {0} exhausted before the horizon")]
    EventBudgetExceeded(u64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
