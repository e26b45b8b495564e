use thiserror::Error;

/// Every failure the toolkit can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate transform: |det M| = {det:e}")]
    DegenerateTransform { det: f64 },
    #[error("singular step matrix at step {step}")]
    SingularStep { step: usize },
    #[error("unstable solution at step {step}: norm {norm:e}")]
    Unstable { step: usize, norm: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("grid too coarse: nx = {nx} (need at least {min})")]
    GridTooCoarse { nx: usize, min: usize },
    #[error("empty series")]
    EmptySeries,
    #[error("index (k,l,m,n,s) is all zero")]
    AllZeroIndex,
    #[error("r must be positive, got {0}")]
    NonpositiveR(f64),
    #[error("candidate roots not populated")]
    RootsNotPopulated,
    #[error("degenerate symbol at p = {p}")]
    DegenerateSymbol { p: f64 },
    #[error("missing trace: {0}")]
    MissingTrace(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Failures that mean an iteration stalled rather than bad input.
    pub fn is_no_convergence(&self) -> bool {
        matches!(self, Error::NoConvergence { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
