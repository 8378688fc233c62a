use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("degenerate spectrum: no eigenvalue exceeds the zero tolerance {zero_tol:e}")]
    DegenerateSpectrum { zero_tol: f64 },

    #[error("equilibrium is not unique: null space has dimension {nullity}")]
    NonUniqueEquilibrium { nullity: usize },

    #[error("unsupported topology for this operation: {0}")]
    UnsupportedTopology(String),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("solution diverged (non-finite state) at t = {t}")]
    Divergence { t: f64 },

    #[error("signal is not periodic: only {crossings} mean crossings found")]
    NotPeriodic { crossings: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::DegenerateSpectrum { .. }
                | Error::StepUnderflow { .. }
                | Error::Divergence { .. }
                | Error::NotPeriodic { .. }
        )
    }
}
