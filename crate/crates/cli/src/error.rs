use std::fmt;

use synsync_core::Error as CoreError;

/// Failure of a CLI run, mapped to the process exit status.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed configuration, unknown or missing keys.
    Config(String),
    /// The configured system violates a model or coupling requirement.
    Validation(String),
    /// An engine failed numerically.
    Numeric(CoreError),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
            CliError::Numeric(e) => write!(f, "numeric failure: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidInput(_)
            | CoreError::OutOfDomain { .. }
            | CoreError::Geometry(_)
            | CoreError::NotNShaped { .. }
            | CoreError::StepTooLarge { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Numeric(e),
        }
    }
}
