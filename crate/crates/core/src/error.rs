use std::path::PathBuf;

/// Errors produced by grid operations, solvers, flows and the command line front end.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid domain: {0}")]
    InvalidDomain(String),

    #[error("operands live on different grid domains")]
    DomainMismatch,

    #[error("primitive does not fit inside the design region: {0}")]
    DomainViolation(String),

    #[error("distance target set is empty")]
    EmptyTarget,

    #[error("mask is empty: {0}")]
    EmptyMask(&'static str),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    IterationLimit {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of an iterative numerical method.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::IterationLimit { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
