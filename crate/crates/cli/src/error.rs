use std::fmt;

/// Failure of a command, carrying the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Unreadable, malformed or inconsistent input (exit 2).
    Input(String),
    /// The parameter search had nothing to search (exit 3).
    Search(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Search(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Search(m) => write!(f, "search failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qqt_core::Error> for CliError {
    fn from(e: qqt_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}
