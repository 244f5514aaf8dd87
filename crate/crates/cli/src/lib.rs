//! Command-line front end: synthesize or ingest meter data, cluster,
//! disaggregate, run baselines, scenarios and sweeps, and write
//! plot-ready CSV files.

mod args;
mod commands;
mod emit;
mod error;
mod files;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::{Cli, Command};
pub use commands::{execute, THREADS_ENV};
pub use emit::{emit_plot_data, histogram, plot_files, HISTOGRAM_BINS};
pub use error::CliError;
pub use files::FileSet;

fn out_dir(command: &Command) -> &std::path::Path {
    match command {
        Command::Synth(a) => &a.out,
        Command::Cluster(a) => &a.out,
        Command::Disaggregate(a) | Command::Baseline(a) => &a.out,
        Command::Scenario(a) => &a.out,
        Command::Sweep(a) => &a.out,
        Command::Correlate(a) => &a.out,
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 on a domain error, 2 on bad usage.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = commands::check_out_dir(out_dir(&cli.command)).and_then(|_| execute(cli.command));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
