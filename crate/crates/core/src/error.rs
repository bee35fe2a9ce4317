use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{op} is not available for the {model} model")]
    Unsupported { model: &'static str, op: &'static str },

    #[error("complex branch precondition violated: {0}")]
    Branch(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(#[from] QuadError),

    #[error("special function failed: {0}")]
    Special(String),

    #[error("numerical failure at sigma = {sigma}: {source}")]
    AtPoint {
        sigma: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("simulation failure: {0}")]
    Simulation(String),

    #[error("set partitions of {n} elements exceed the cap of {cap}")]
    PartitionCap { n: usize, cap: usize },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Errors caused by malformed input as opposed to numerical breakdown.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::InvalidInput(_)
            | Error::Unsupported { .. }
            | Error::PartitionCap { .. }
            | Error::Json(_) => true,
            Error::AtPoint { source, .. } => source.is_config_error(),
            _ => false,
        }
    }

    pub(crate) fn at(sigma: f64) -> impl FnOnce(Error) -> Error {
        move |e| Error::AtPoint {
            sigma,
            source: Box::new(e),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum QuadError {
    #[error("subdivision budget of {limit} exhausted on [{lo}, {hi}] with error estimate {err:e}")]
    Budget {
        lo: f64,
        hi: f64,
        limit: usize,
        err: f64,
    },
    #[error("integrand tail did not decay before T = {t_max:e}")]
    Tail { t_max: f64 },
    #[error("non-finite integrand value at {at}")]
    NonFinite { at: f64 },
    #[error("inner integral failed at z = {z}: {inner}")]
    Inner { z: f64, inner: Box<QuadError> },
}
