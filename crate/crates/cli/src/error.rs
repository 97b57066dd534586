use std::io;

use thiserror::Error;

/// Exit code for malformed input, bad flags and invalid plans.
pub const EXIT_INPUT: u8 = 2;
/// Exit code for numerical failures such as a fit that does not converge.
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },

    #[error("{0}")]
    Numeric(String),

    #[error(transparent)]
    Core(#[from] ael_core::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use ael_core::Error as E;
        match self {
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Core(E::Convergence { .. } | E::Singular { .. } | E::NoSolution | E::Degenerate(_)) => EXIT_NUMERIC,
            _ => EXIT_INPUT,
        }
    }

    pub fn io(path: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
