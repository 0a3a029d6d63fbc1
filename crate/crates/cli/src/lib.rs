//! `timealloc` command-line pipeline.
//!
//! Every command is a plain function over its parsed arguments, so the same
//! code paths are reachable from tests without spawning the binary.

pub mod args;
pub mod config;
pub mod error;
pub mod estimate;
pub mod files;
pub mod measure;
pub mod schema;
pub mod simulate;
pub mod table8;

use std::ffi::OsString;

use clap::Parser;

use crate::args::{Cli, Command};
pub use crate::error::{CliError, CliResult};

/// Parses `args` (program name first), runs the command and returns the exit
/// status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: &Command) -> CliResult<()> {
    match command {
        Command::Simulate(a) => simulate::cmd_simulate(a).map(|_| ()),
        Command::Estimate(a) => estimate::cmd_estimate(a).map(|_| ()),
        Command::ReproduceTable8(a) => table8::cmd_reproduce_table8(a).map(|_| ()),
        Command::Exposure(a) => measure::cmd_exposure(a),
        Command::Weather(a) => measure::cmd_weather(a),
    }
}

pub(crate) fn warn(msg: &str) {
    eprintln!("warning: {msg}");
}
