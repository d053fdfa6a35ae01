use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violated the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A computation finished but failed a numerical-quality check
    /// (asymmetry, instability, ...).
    #[error("numerical quality error: {0}")]
    NumericalQuality(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
