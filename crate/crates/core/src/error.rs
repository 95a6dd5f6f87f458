use thiserror::Error;

use crate::evolve::SimState;
use crate::spectral::Space;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("expected a {expected:?}-space field, got {found:?}")]
    WrongSpace { expected: Space, found: Space },

    #[error("fields or symbols live on different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("wrap guard violated: {0}")]
    WrapGuard(String),

    /// The state went non-finite; `last_good` is the final state that was still finite.
    #[error("non-finite values encountered at t = {t}")]
    NonFinite { t: f64, last_good: Box<SimState> },

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("oracle check failed: {0}")]
    OracleFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidGrid(_) | Error::InvalidParameter(_) => 1,
            Error::OracleFailure(_) => 3,
            _ => 2,
        }
    }
}
