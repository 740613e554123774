use std::fmt;

use ushape_core::Error;

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const DOMAIN: i32 = 3;
    pub const TRACTABILITY: i32 = 4;
    pub const GATE: i32 = 5;
    pub const ACCURACY: i32 = 6;
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Core(Error),
    Gate(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io(_) => exit::IO,
            CliError::Gate(_) => exit::GATE,
            CliError::Core(Error::Tractability { .. }) => exit::TRACTABILITY,
            CliError::Core(Error::Accuracy { .. }) => exit::ACCURACY,
            CliError::Core(_) => exit::DOMAIN,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Gate(v) => write!(f, "gate failed: {}", v.join("; ")),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Usage(format!("malformed CSV: {e}")),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Usage(format!("malformed JSON: {e}"))
        }
    }
}
