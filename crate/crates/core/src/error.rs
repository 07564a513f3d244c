use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("invalid axes: {0}")]
    InvalidAxes(String),

    #[error("missing conditional row for support point (x={x}, y={y})")]
    MissingRow { x: usize, y: usize },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("markov chain violated: defect {defect:.3e} bits exceeds tolerance {tol:.1e}")]
    MarkovViolation { defect: f64, tol: f64 },

    #[error("solver infeasible: best markov defect {defect:.3e} bits exceeds {tol:.1e}")]
    SolverInfeasible { defect: f64, tol: f64 },

    #[error("index set too large: {0}")]
    SizeGuard(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
