//! Command-line front end: argument parsing, input files, report encoding.

pub mod args;
pub mod commands;
pub mod error;
pub mod input;
pub mod report;

use std::io::Write;

use args::{Cli, Command};
use error::CliResult;

/// Runs one parsed invocation. `Ok(false)` means a check failed.
pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<bool> {
    match &cli.command {
        Command::Eval(a) => commands::eval(a, out),
        Command::Compare(a) => commands::compare(a, out),
        Command::Sweep(a) => commands::sweep(a, out),
        Command::Moments(a) => commands::moments(a, out),
        Command::Verify(a) => commands::verify(a, out),
    }
}
