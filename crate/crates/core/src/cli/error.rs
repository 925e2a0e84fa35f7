use std::path::Path;

use thiserror::Error;

use crate::error::Error;
use crate::numerics::NumericsError;

/// Failure of a command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    /// 2 for configuration, 3 for data, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Config(format!("{}: {e}", path.display()))
    }

    pub(crate) fn data_file(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

fn classify(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::InvalidParameters(_) => 2,
        Error::Numerics(NumericsError::InvalidArgument(_)) => 2,
        Error::Data { .. } | Error::Rank { .. } => 3,
        Error::Subject { source, .. } => classify(source),
        _ => 4,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match classify(&e) {
            2 => CliError::Config(e.to_string()),
            3 => CliError::Data(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
