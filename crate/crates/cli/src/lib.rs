//! Batch front end for `kgr-core`: extraction, retrieval, perturbation,
//! similarity measurement, perturbation sweeps and prompt generation over
//! flat files.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;
pub mod pipeline;
pub mod sweep;

use kgr_core::KgError;
use thiserror::Error;

pub use args::Cli;
pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("{failed} of {total} sweep cells failed")]
    PartialSweep { failed: usize, total: usize },

    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::PartialSweep { .. } => 3,
            CliError::Transport(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl From<KgError> for CliError {
    fn from(e: KgError) -> Self {
        if e.is_transport() {
            CliError::Transport(e.to_string())
        } else {
            CliError::Other(e.into())
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    commands::run(&cli)
}
