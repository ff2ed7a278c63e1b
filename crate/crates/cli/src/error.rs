use thiserror::Error;

/// Exit status for a rejected configuration or unusable output location.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for a computation that failed numerically.
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("config file line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn config(line: usize, msg: impl Into<String>) -> Self {
        CliError::Config {
            line,
            message: msg.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Validation(_) | CliError::Config { .. } | CliError::Output(_) => {
                EXIT_VALIDATION
            }
        }
    }
}

impl From<memkernel::Error> for CliError {
    fn from(e: memkernel::Error) -> Self {
        match e {
            memkernel::Error::Numeric { .. } => CliError::Numeric(e.to_string()),
            memkernel::Error::Io(_) => CliError::Output(e.to_string()),
            memkernel::Error::Domain(_) | memkernel::Error::Parse { .. } => {
                CliError::Validation(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
