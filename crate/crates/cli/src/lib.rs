//! Command-line front end for `fpqsim`.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

use std::io::{self, Write};

use thiserror::Error;

use crate::args::Cli;
use crate::config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] fpqsim::Error),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Gate(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io(_) => 1,
            Self::Validation(_) => 2,
            Self::Core(fpqsim::Error::Domain { .. } | fpqsim::Error::InvalidGrid(_)) => 2,
            Self::Core(_) | Self::Numerical(_) => 3,
            Self::Gate(_) => 4,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

/// Runs one invocation. Output is written before a gate failure is returned.
pub fn run(cli: Cli, stdout: &mut impl Write) -> Result<(), CliError> {
    let cfg = RunConfig::from_cli(cli)?;
    let outcome = commands::execute(&cfg)?;
    match output::write_report(&outcome.report, cfg.out.as_deref(), cfg.format, stdout) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => return Ok(()),
        other => other?,
    };
    match outcome.gate_failure {
        Some(msg) => Err(CliError::Gate(msg)),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let domain = fpqsim::MirrorSpec::new(2.0).unwrap_err();
        assert_eq!(CliError::Core(domain).exit_code(), 2);
        let alias = fpqsim::Error::Aliasing("step".into());
        assert_eq!(CliError::Core(alias).exit_code(), 3);
        assert_eq!(CliError::Validation("x".into()).exit_code(), 2);
        assert_eq!(CliError::Numerical("x".into()).exit_code(), 3);
        assert_eq!(CliError::Gate("x".into()).exit_code(), 4);
        assert_eq!(CliError::from(io::Error::other("x")).exit_code(), 1);
    }
}
