use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{op}: argument {value} lies inside the support [{lo}, {hi}]")]
    Domain { op: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("{op}: {value} is out of range ({detail})")]
    OutOfRange { op: &'static str, value: f64, detail: String },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("infeasible coupling: eigenvalue {0} outside [0, 1]")]
    InfeasibleCoupling(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("dimension {0} exceeds the eigensolver cap of 2048")]
    TooLarge(usize),
    #[error("importance proposal is not positive ({0:e}); the tilt must lie in [0, 1)")]
    ProposalNotPositive(f64),
    #[error("Bessel series argument {0} exceeds the validity bound 30")]
    ArgumentOverflow(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
