//! Library half of the `ushape` binary: flag parsing, flat TOML run
//! configs and the subcommands.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::fs;

use args::Flags;
use config::{Command, RunConfig};
use error::CliError;

/// Resolves defaults, the optional config file and the flags.
pub fn resolve(command: Command, flags: &Flags) -> Result<RunConfig, CliError> {
    let file = match &flags.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Some(text.parse::<toml::Table>().map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    RunConfig::resolve(file, flags.overlay(command)?)
}

/// Runs one invocation; `--dump-config` prints the resolved config instead.
pub fn run(command: Command, flags: &Flags) -> Result<(), CliError> {
    let cfg = resolve(command, flags)?;
    if flags.dump_config {
        return output::emit(None, cfg.to_toml()?.as_bytes());
    }
    commands::dispatch(&cfg)
}
