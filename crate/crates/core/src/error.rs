use thiserror::Error;

/// Errors raised by the laboratory's numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("degenerate configuration: {0}")]
    DegenerateConfig(String),

    #[error("point {index} lies outside the cell")]
    MembershipViolation { index: usize },

    #[error("root finding failed: residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    RootFindingFailure { residual: f64, tolerance: f64 },

    #[error("zero modulus at index {0}")]
    ZeroModulus(usize),

    #[error("iteration limit reached after {iterations} iterations")]
    IterationLimit { iterations: usize },

    #[error("free+quasi-free count never reached {target}; trajectory {trajectory:?}")]
    TargetUnreachable {
        target: usize,
        trajectory: Vec<usize>,
    },

    #[error("set has zero volume")]
    EmptySet,

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("bad exponent tuple: {0}")]
    BadExponents(String),

    #[error("could not certify disjoint placement: {0}")]
    PlacementFailure(String),

    #[error("function has zero norm")]
    ZeroFunction,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
