use thiserror::Error;

/// Failures of a command, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or schema-invalid input.
    #[error("input error: {0}")]
    Input(String),
    /// A relation or computation failed on valid input.
    #[error("{0}")]
    Relation(String),
    #[error(transparent)]
    Core(#[from] hitchin_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use hitchin_core::Error as E;
        match self {
            CliError::Input(_) => 2,
            CliError::Relation(_) => 1,
            // shape errors come from the config, the rest from the mathematics
            CliError::Core(E::DimensionMismatch { .. } | E::InvalidIndex(_)) => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
