use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not nilpotent of order 3: {0}")]
    NotNilpotent(String),
    #[error("generator must have rank 2, found rank {0}")]
    WrongRank(usize),
    #[error("the square of the generator vanishes")]
    SquareVanishes,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector lies in ker(w^2); slicing is undefined")]
    InKernel,
    #[error("scalar modes do not match: {0}")]
    ModeMismatch(String),
    #[error("operation requires dimension 3, found {0}")]
    DimensionNot3(usize),
    #[error("region too large: {points} lattice points exceed the limit {limit}")]
    RegionTooLarge { points: f64, limit: f64 },
    #[error("degenerate quadric datum: {0}")]
    DegenerateDatum(String),
    #[error("syntax error at position {pos}: {msg}")]
    SyntaxError { pos: usize, msg: String },
    #[error("jet unavailable: {0}")]
    JetUnavailable(String),
    #[error("curvature vanishes at the requested point")]
    ZeroCurvature,
    #[error("epsilon {eps} outside the admissible range [{lo}, {hi}]")]
    BadEpsilonRange { eps: f64, lo: f64, hi: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
