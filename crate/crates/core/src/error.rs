use std::path::PathBuf;

/// Errors raised by the model, the solvers and the scenario tooling.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A model function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Market or firm data violates a structural assumption.
    #[error("invalid market: {0}")]
    InvalidMarket(String),

    /// An operation was called at a point that does not satisfy its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// No face of the linearized equation produced a consistent response.
    #[error("no face of the linearized equation admits a solution")]
    NoSolutionFound,

    /// Two faces produced distinct responses, so the derivative is not single-valued.
    #[error("linearized equation has multiple solutions: {0:?} and {1:?}")]
    MultipleSolutions(Vec<f64>, Vec<f64>),

    /// Scenario configuration is malformed.
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
