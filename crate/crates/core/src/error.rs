use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate norm: {0}")]
    DegenerateNorm(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("map is not injective (rank {rank} < {cols})")]
    NotInjective { rank: usize, cols: usize },

    #[error("map is not surjective (rank {rank} < {rows})")]
    NotSurjective { rank: usize, rows: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("linear program infeasible: {0}")]
    Infeasible(String),

    #[error("enumeration budget of {budget} examined points exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("precision exhausted at {bits} bits while deciding {what}")]
    Precision { bits: u32, what: String },

    #[error("search box of radius {box_radius} does not contain the ball (needs {needed})")]
    BoxTooSmall { box_radius: i64, needed: i64 },

    #[error("Monte Carlo budget of {samples} samples exhausted at relative half-width {achieved:.4} (target {target:.4})")]
    MonteCarloBudget { samples: u64, achieved: f64, target: f64 },

    #[error("polynomial rejected: {0}")]
    BadPolynomial(String),

    #[error("ring mismatch: {0}")]
    RingMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
