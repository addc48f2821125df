use ats_lp::{ModelError, SolveError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("out of range: {0}")]
    InvalidRange(String),
    #[error("unknown payload field `{0}`")]
    UnknownField(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("big-M too small: {0}")]
    BadBigM(String),
    #[error("model is infeasible: {0}")]
    Infeasible(String),
    #[error("solver failed: {0}")]
    SolverFailure(String),
    #[error("invalid costs: {0}")]
    InvalidCosts(String),
    #[error("unsupported distribution: {0}")]
    UnsupportedDistribution(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
