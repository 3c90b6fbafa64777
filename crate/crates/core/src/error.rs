use thiserror::Error;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("case failed validation: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("unknown {kind} id {id}")]
    UnknownId { kind: &'static str, id: usize },

    #[error("singular network matrix: {0}")]
    SingularNetwork(String),

    #[error("power flow did not converge: {0}")]
    PowerFlow(String),

    #[error("operating point is not an equilibrium (max |dx/dt| = {0:.3e})")]
    NotEquilibrium(f64),

    #[error("limiter active at the operating point: {0}")]
    LimiterActive(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("linear algebra: {0}")]
    Linalg(String),

    #[error("case unstable without fault duration")]
    UnstableWithoutFault,

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
