//! Command-line front end for the GM/AM concentration toolkit.

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

pub mod config;
pub mod output;
pub mod run;
pub mod verify;

pub use config::{parse_args, Cli, Command, OutputFormat, WeightSpec};

/// Parse argv, exiting with the conventional usage code (2) on bad arguments.
pub fn parse_args_or_exit<I, T>(argv: I) -> Cli
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => err.exit(),
    }
}

/// Dispatch a parsed configuration. Returns the process exit code.
pub fn run(cli: &Cli) -> Result<ExitCode> {
    run::dispatch(cli)
}
