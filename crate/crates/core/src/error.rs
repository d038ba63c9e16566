use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model parameter violates one of its invariants.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An operation received an argument outside its domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("numerical failure in `{integral}`: {detail}")]
    Numerical { integral: String, detail: String },

    /// A sampled network had no usable cell inside the measurement window.
    #[error("realization rejected: {0}")]
    RealizationRejected(String),

    /// Too many realizations were rejected for the estimate to be meaningful.
    #[error("only {effective} of {requested} realizations usable (draw budget {budget} exhausted)")]
    InsufficientRealizations {
        effective: usize,
        requested: usize,
        budget: usize,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
