use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine failed to reach its target. `partial` carries the
    /// best estimate available when the routine gave up.
    #[error("numeric failure: {message}")]
    Numeric { message: String, partial: Option<f64> },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>, partial: Option<f64>) -> Self {
        Error::Numeric {
            message: msg.into(),
            partial,
        }
    }
}
