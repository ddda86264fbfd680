use thiserror::Error;

#[derive(Debug, Error)]
pub enum MtfaError {
    #[error("matrix is not symplectic (residual {residual:.3e})")]
    NotSymplectic { residual: f64 },
    #[error("matrix dimension {0} is not even")]
    OddDimension(usize),
    #[error("unknown name: {0}")]
    UnknownName(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parameter overflow: {0}")]
    Overflow(String),
    #[error("signal has zero energy")]
    ZeroSignal,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("B block is singular")]
    SingularB,
    #[error("B blocks of the configuration are singular: {0}")]
    SingularBBlocks(String),
    #[error("transform plan mismatch: {0}")]
    PlanMismatch(String),
    #[error("nonconforming grid: {0}")]
    NonconformingGrid(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("grid too large: {0}")]
    GridTooLarge(String),
    #[error("degenerate anchor (r = {0:.3e})")]
    DegenerateAnchor(f64),
    #[error("constraint violated: {0}")]
    ConstraintViolated(String),
    #[error("ill-conditioned quotient: {0}")]
    IllConditionedQuotient(String),
    #[error("observation is identically zero")]
    AllZeroObservation,
    #[error("rank deficient system: {0}")]
    RankDeficient(String),
    #[error("budget exhausted after {0} evaluations")]
    BudgetExhausted(usize),
    #[error("unknown method: {0}")]
    UnknownMethod(String),
    #[error("pipeline failure: {0}")]
    PipelineFailure(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MtfaError>;

impl MtfaError {
    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        use MtfaError::*;
        match self {
            SingularB
            | DegenerateAnchor(_)
            | IllConditionedQuotient(_)
            | AllZeroObservation
            | RankDeficient(_)
            | BudgetExhausted(_)
            | PipelineFailure(_)
            | Overflow(_) => 3,
            _ => 2,
        }
    }
}

impl From<csv::Error> for MtfaError {
    fn from(e: csv::Error) -> Self {
        MtfaError::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for MtfaError {
    fn from(e: serde_json::Error) -> Self {
        MtfaError::Parse(e.to_string())
    }
}
