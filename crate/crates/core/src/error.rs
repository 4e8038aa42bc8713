use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-physical material: {0}")]
    Material(String),

    #[error("ill-posed material field: element {element} has a tensor that is not positive definite")]
    IllPosedMaterial { element: usize },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("homogenized tensor is singular, apparent Poisson ratio undefined")]
    DegenerateTensor,

    #[error("level set {0} has a single sign everywhere")]
    DegenerateLevelSet(usize),

    #[error("time step {dt:.3e} exceeds the CFL bound {bound:.3e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("cell solutions were computed for a different material field")]
    StaleSolution,

    #[error("{context}: {source}")]
    Io {
        context: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("state serialization failed: {0}")]
    Serialization(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            context: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
