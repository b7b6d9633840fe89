//! Command-line experiment runner for `halfspace-core`.

pub mod args;
pub mod plots;
pub mod report;
pub mod run;
pub mod settings;
pub mod spectral;
pub mod svg;
pub mod sweep;
pub mod table;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use settings::UsageError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_LEARNING: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Exit status for a failed command: 1 for bad input, 2 for learning
/// failures (including infeasible outlier removal), 3 for I/O.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return EXIT_VALIDATION;
        }
        if let Some(e) = cause.downcast_ref::<halfspace_core::Error>() {
            return if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_LEARNING
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
    }
    EXIT_LEARNING
}

/// The error chain on one line, skipping causes already spelled out by
/// the message that wraps them.
pub fn render_error(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if out.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

pub fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Run(a) => run::cmd_run(a),
        Command::Sweep(a) => sweep::cmd_sweep(a),
        Command::Spectral(a) => spectral::cmd_spectral(a),
        Command::Report(a) => report::cmd_report(a),
    }
}

/// Parses `argv`, runs the command and returns the process exit status.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", render_error(&e));
            exit_code(&e)
        }
    }
}
