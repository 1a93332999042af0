use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The eigensystem is defective (at an exceptional point), so eigenmode
    /// projections do not exist.
    #[error("projection unavailable: eigensystem is defective")]
    ProjectionUnavailable,

    #[error("undefined projection: total intensity {0:e} is below threshold")]
    UndefinedProjection(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
