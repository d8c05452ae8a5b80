use std::fmt;

use localmax::Error;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Input = 2,
    NonConvergence = 3,
    Infeasible = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: ExitCode::Input,
            message: message.into(),
        }
    }

    pub fn infeasible(message: impl Into<String>) -> Self {
        CliError {
            code: ExitCode::Infeasible,
            message: message.into(),
        }
    }

    pub fn non_convergence(message: impl Into<String>) -> Self {
        CliError {
            code: ExitCode::NonConvergence,
            message: message.into(),
        }
    }

    pub fn context(self, what: impl fmt::Display) -> Self {
        CliError {
            code: self.code,
            message: format!("{what}: {}", self.message),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Diverged { .. } => ExitCode::NonConvergence,
            Error::Infeasible(_)
            | Error::EmptySet(_)
            | Error::Degenerate(_)
            | Error::GridTooLarge { .. } => ExitCode::Infeasible,
            _ => ExitCode::Input,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::input(format!("model file: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
