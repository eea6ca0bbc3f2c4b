use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical failure: {msg}")]
    Numerical { msg: String, trace: Vec<f64> },
    #[error("invariant breach: {0}")]
    Invariant(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numerical(msg: impl Into<String>, trace: Vec<f64>) -> Self {
        Error::Numerical { msg: msg.into(), trace }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
