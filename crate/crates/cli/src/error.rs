use std::fmt;
use std::process::ExitCode;

/// Failure of a command, carrying its process exit status.
#[derive(Debug)]
pub enum CliError {
    /// Missing or unreadable input file (exit 2).
    Io(String),
    /// Malformed input or invalid argument (exit 3).
    Invalid(String),
    /// A count exceeded 64 bits (exit 4).
    Overflow(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::Io(_) => 2,
            Self::Invalid(_) => 3,
            Self::Overflow(_) => 4,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(msg) | Self::Invalid(msg) | Self::Overflow(msg) => f.write_str(msg),
        }
    }
}

impl From<memwall::Error> for CliError {
    fn from(e: memwall::Error) -> Self {
        match e {
            memwall::Error::Overflow(_) => Self::Overflow(e.to_string()),
            other => Self::Invalid(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
