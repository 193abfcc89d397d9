//! `lsem` command-line pipeline.
//!
//! Every stage reads and writes plain files: LSDF latents, score CSVs,
//! boundary JSON and report envelopes. Exit status is 0 on success, 1 for
//! usage and validation errors and 2 for I/O failures.

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub mod args;
pub mod commands;
mod error;
pub mod provenance;
pub mod reports;

pub use error::{CliError, CliResult};

use args::{Cli, Command};

/// Runs one invocation and returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match cli.threads {
        Some(0) => Err(CliError::usage("--threads must be >= 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(|| dispatch(&cli.command)),
        None => dispatch(&cli.command),
    }
}

fn dispatch(command: &Command) -> CliResult<()> {
    match command {
        Command::Sample(a) => commands::sample(a),
        Command::OracleScore(a) => commands::oracle_score(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Edit(a) => commands::edit(a),
        Command::Project(a) => commands::project(a),
        Command::Rescore(a) => commands::rescore(a),
        Command::Correlate(a) => commands::correlate(a),
        Command::Layerwise(a) => commands::layerwise(a),
        Command::Identity(a) => commands::identity(a),
        Command::Verify(v) => commands::verify(v),
        Command::Report(a) => commands::report(a),
    }
}
