//! CLI error type carrying the process exit code.

use photospring::Error as CoreError;

/// Exit codes of the command-line tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Config = 2,
    Data = 3,
    NonConvergence = 4,
    Numerical = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    pub fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn from_core(err: CoreError) -> Self {
        let code = match &err {
            CoreError::Config { .. } | CoreError::Domain(_) | CoreError::LinearityGuard { .. } => {
                ExitCode::Config
            }
            CoreError::Data(_) => ExitCode::Data,
            CoreError::Singularity(_) | CoreError::Integration { .. } => ExitCode::Numerical,
        };
        Self::new(code, err.to_string())
    }

    pub fn io(context: &str, err: std::io::Error) -> Self {
        Self::new(ExitCode::Data, format!("{context}: {err}"))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        CliError::from_core(err)
    }
}
