use std::fmt;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Transport(String),
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 2,
            CliError::Transport(_) => 3,
            CliError::Domain(_) => 4,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Transport(m) => write!(f, "transport: {m}"),
            CliError::Domain(m) => write!(f, "{m}"),
        }
    }
}

pub fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

pub fn domain(m: impl fmt::Display) -> CliError {
    CliError::Domain(m.to_string())
}

pub type Result<T> = std::result::Result<T, CliError>;
