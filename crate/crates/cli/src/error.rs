use std::fmt;

/// Top-level CLI failure, split by who is at fault.
///
/// `Usage` covers everything the user can fix from the command line: bad
/// flags or config values, missing or malformed input files, checkpoints
/// that do not parse. `Internal` covers breaches of invariants the program
/// itself is responsible for, plus failures writing our own artifacts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Internal(String),
}

impl CliError {
    /// Process exit code for this failure: 2 for usage, 1 for internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Shorthand for wrapping a displayable cause as a usage error.
pub fn usage(err: impl fmt::Display) -> CliError {
    CliError::Usage(err.to_string())
}

/// Shorthand for wrapping a displayable cause as an internal error.
pub fn internal(err: impl fmt::Display) -> CliError {
    CliError::Internal(err.to_string())
}
