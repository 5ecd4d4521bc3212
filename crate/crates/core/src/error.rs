use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulation engine and dataset tooling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid droplet pattern: {0}")]
    InvalidPattern(String),

    #[error("category {0} out of range 1..={1}")]
    CategoryOutOfRange(usize, usize),

    #[error("droplet radius {radius_cells:.3} cells exceeds half the domain ({half} cells)")]
    DropletTooLarge { radius_cells: f64, half: usize },

    #[error("no wet cells to solve on")]
    EmptyWetSet,

    #[error("conjugate gradient did not converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("degenerate force balance: shape integral is {0}")]
    DegenerateBalance(f64),

    #[error("simulation stalled: {0}")]
    Stalled(String),

    #[error("CFL violation: outgoing Courant sum {0:.4} exceeds 1")]
    CflViolation(f64),

    #[error("gap would fall to {h_new:.3e} m, below half the thickness floor")]
    GapUnderflow { h_new: f64 },

    #[error("overfill redistribution did not settle after {0} sweeps")]
    RedistributionFailed(usize),

    #[error("state already terminated ({0})")]
    AlreadyTerminated(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("statistics: {0}")]
    Stats(String),

    #[error("metrics: {0}")]
    Metrics(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
