use std::fmt;

/// A failure classified by exit code: bad input (1) or a computation or
/// I/O failure on valid input (2).
#[derive(Debug)]
pub enum CliError {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn validation(msg: impl fmt::Display) -> Self {
        CliError::Validation(anyhow::anyhow!("{msg}"))
    }

    pub fn runtime(msg: impl fmt::Display) -> Self {
        CliError::Runtime(anyhow::anyhow!("{msg}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(e) => write!(f, "invalid input: {e:#}"),
            CliError::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<amdplab_core::Error> for CliError {
    fn from(e: amdplab_core::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.into())
        } else {
            CliError::Runtime(e.into())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
