use thiserror::Error;

/// Errors raised by the moment engines and model constructors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("defective distribution: {0}")]
    Defective(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("infinite moment: {0}")]
    InfiniteMoment(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
