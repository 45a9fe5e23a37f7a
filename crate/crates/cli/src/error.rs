use std::fmt;
use std::process::ExitCode;

use thiserror::Error;

/// Configuration problem, anchored to a line when one is to blame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError { line: Some(line), message: message.into() }
    }

    pub fn global(message: impl Into<String>) -> Self {
        ConfigError { line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "config line {n}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(branchsim_core::Error),
    #[error("capacity exceeded: {0}")]
    Capacity(branchsim_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<branchsim_core::Error> for CliError {
    fn from(e: branchsim_core::Error) -> Self {
        use branchsim_core::Error as E;
        match e.root() {
            E::CapacityExceeded { .. } => CliError::Capacity(e),
            E::InvalidArgument(m) => CliError::Config(ConfigError::global(m.clone())),
            E::SingularPotential(_) | E::TopologyError => CliError::Config(ConfigError::global(e.to_string())),
            _ => CliError::Numerical(e),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
            CliError::Capacity(_) => 4,
        }
    }
}

impl From<&CliError> for ExitCode {
    fn from(e: &CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}
