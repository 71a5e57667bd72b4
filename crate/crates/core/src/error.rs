use std::path::PathBuf;

use thiserror::Error;

use crate::solvers::SolveResult;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("column {index} has norm below 1e-14")]
    ZeroColumn { index: usize },

    #[error("matrix columns are not normalized")]
    NotNormalized,

    #[error("at least two columns are required, got {0}")]
    TooFewColumns(usize),

    #[error("at least two blocks are required, got {0}")]
    TooFewBlocks(usize),

    #[error("support enumeration too large: C({n},{k}) exceeds {limit}")]
    EnumerationTooLarge { n: usize, k: usize, limit: u128 },

    #[error("coherence cap not reached after {attempts} attempts (best {best})")]
    CapUnreachable { attempts: usize, best: f64 },

    #[error("condition violated: {0}")]
    ConditionViolated(String),

    #[error("noise projection degenerate: ‖Aᵀz₀‖ below 1e-14 after {0} draws")]
    DegenerateProjection(usize),

    #[error("solver did not converge after {} iterations (residual {})", .0.iterations, .0.kkt_residual)]
    NotConverged(Box<SolveResult>),

    #[error("proximal map self-check failed: {0}")]
    ProxFailure(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Validation errors are user-input problems; everything else is a
    /// runtime failure. The CLI maps these to exit codes 1 and 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidDimensions(_)
                | Error::InvalidArgument(_)
                | Error::ConditionViolated(_)
                | Error::InvalidConfig(_)
                | Error::Parse(_)
                | Error::NotNormalized
                | Error::TooFewColumns(_)
                | Error::TooFewBlocks(_)
                | Error::EnumerationTooLarge { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
