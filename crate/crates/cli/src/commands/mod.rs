pub mod compare;
pub mod density;
pub mod kernel;
pub mod simulate;
pub mod sweep;

use crate::config::{Command, RunConfig};
use crate::error::CliError;

pub fn dispatch(cfg: &RunConfig) -> Result<(), CliError> {
    if !cfg.inputs.is_empty() && cfg.command != Some(Command::Compare) {
        return Err(CliError::Usage("positional input files are only accepted by compare".into()));
    }
    match cfg.command {
        Some(Command::Kernel) => kernel::run(cfg),
        Some(Command::Density) => density::run(cfg),
        Some(Command::Simulate) => simulate::run(cfg),
        Some(Command::Compare) => compare::run(cfg),
        Some(Command::Sweep) => sweep::run(cfg),
        None => Err(CliError::Usage("no command given".into())),
    }
}
