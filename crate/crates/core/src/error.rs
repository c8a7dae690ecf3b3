use thiserror::Error;

/// Error type shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid regime: {0}")]
    InvalidRegime(String),
    #[error("grid construction failed: {0}")]
    Grid(String),
    #[error("domain error in pointwise evaluation: {0}")]
    Domain(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("line search failed: {0}")]
    LineSearch(String),
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("flow stalled: {0}")]
    FlowStall(String),
    #[error("shooting bracket failure: {0}")]
    Bracket(String),
    #[error("barrier calibration failed: {0}")]
    Calibration(String),
    #[error("fit window is empty at the current grid: {0}")]
    EmptyFitWindow(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
