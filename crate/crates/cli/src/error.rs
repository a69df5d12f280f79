use thiserror::Error;

/// Failures surfaced by the front end, each tied to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] ordstat::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// 2 config, 3 capacity, 4 numeric or convergence.
    pub fn exit_code(&self) -> i32 {
        use ordstat::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) | E::UnsupportedModel(_) | E::Defective(_) => 2,
                E::Capacity(_) => 3,
                E::NonConvergence(_) | E::InfiniteMoment(_) => 4,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
