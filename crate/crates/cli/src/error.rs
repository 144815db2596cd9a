use std::fmt;
use std::io;
use std::path::Path;

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Reading or writing failed (exit 1).
    Io(String),
    /// Bad input data, configuration or usage (exit 2).
    Invalid(String),
    /// A verification check ran and failed (exit 3).
    Check(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Check(_) => 3,
        }
    }

    pub fn invalid(msg: impl fmt::Display) -> Self {
        CliError::Invalid(msg.to_string())
    }

    /// A missing input is a usage problem; other read failures are I/O.
    pub fn read(path: &Path, e: io::Error) -> Self {
        let msg = format!("{}: {e}", path.display());
        if e.kind() == io::ErrorKind::NotFound {
            CliError::Invalid(msg)
        } else {
            CliError::Io(msg)
        }
    }

    pub fn write(path: &Path, e: io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Invalid(m) => write!(f, "{m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Context for module errors, which are all validation failures.
pub trait Context<T> {
    fn context(self, what: impl fmt::Display) -> CliResult<T>;
}

impl<T, E: fmt::Display> Context<T> for Result<T, E> {
    fn context(self, what: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError::Invalid(format!("{what}: {e}")))
    }
}
