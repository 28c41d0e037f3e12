use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed instance: {0}")]
    Parse(String),

    #[error("localizing block of constraint {constraint} not available at level {level}")]
    BlockUnavailable { constraint: usize, level: usize },

    #[error("objective monomial of degree {degree} exceeds moment index degree {max_degree}")]
    ObjectiveOutOfRange { degree: u32, max_degree: u32 },

    #[error("coordinate {0} does not appear in any active block")]
    AbsentCoordinate(usize),

    #[error("candidate extraction degenerate: {0}")]
    ExtractionDegenerate(String),

    #[error("warm state does not match the active blocks: {0}")]
    ShapeMismatch(String),

    #[error("randomized block probe disagrees with the constructed map for constraint {0}")]
    ProbeMismatch(usize),

    #[error("no feasible grid point found")]
    NoFeasiblePoint,

    #[error("oracle needs a finite box: {0}")]
    NoBox(String),
}

pub type Result<T> = std::result::Result<T, Error>;
