//! Command-line driver for the `localmax` library.
//!
//! Subcommands: `norm`, `train`, `evaluate`, `simulate` and `gridsearch`.
//! Each is callable in-process through [`run`].

pub mod args;
pub mod commands;
pub mod error;
pub mod grid;
pub mod output;
pub mod sets;

use std::io::Write;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult, ExitCode};

pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Norm(a) => commands::norm(a, out),
        Command::Train(a) => commands::train(a, out),
        Command::Evaluate(a) => commands::evaluate(a, out),
        Command::Simulate(a) => commands::simulate(a, out),
        Command::Gridsearch(a) => commands::gridsearch(a, out),
    }
}
