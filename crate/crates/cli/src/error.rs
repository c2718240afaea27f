//! Error classes mapped to the binary's exit-code contract: 0 on success,
//! 2 for validation/parse problems, 3 for numerical failures.

use thiserror::Error;

/// A command failure with a stable exit-code class.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad inputs: missing or unparseable files, inconsistent shapes,
    /// out-of-range parameters. Exit code 2.
    #[error("{0}")]
    Validation(String),
    /// The computation or output stage failed after inputs validated:
    /// solver breakdowns, write errors. Exit code 3.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    /// Process exit code for this class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    /// Shorthand constructor for the validation class.
    pub fn validation(message: impl Into<String>) -> Self {
        CliError::Validation(message.into())
    }

    /// Shorthand constructor for the numerical class.
    pub fn numerical(message: impl Into<String>) -> Self {
        CliError::Numerical(message.into())
    }
}

impl From<dsiht::Error> for CliError {
    fn from(e: dsiht::Error) -> Self {
        match &e {
            dsiht::Error::InvalidState(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

/// Result alias used across the command implementations.
pub type CliResult<T> = Result<T, CliError>;
