//! Command-line front end: `boicp align` registers one pair, `boicp bench`
//! runs the pair-selection benchmark over a sequence.
//!
//! Exit codes: 0 on success, 1 on usage, parse or I/O errors, 2 when
//! registration fails or a benchmark finds no pairs.

mod align;
mod bench;
mod output;
mod settings;
mod synth_cmd;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use crate::output::{AlignReport, HistoryRecord, SCHEMA_VERSION};
pub use crate::settings::{parse_bounds, Method};

/// Exit status of a failed command.
#[derive(Debug)]
pub(crate) enum Failure {
    /// Usage, parse or I/O problem.
    Usage(String),
    /// Registration failed or there was nothing to register.
    Registration(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Registration(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Registration(m) => m,
        }
    }
}

impl From<boicp::Error> for Failure {
    fn from(e: boicp::Error) -> Self {
        match e {
            boicp::Error::RegistrationFailed { .. } => Failure::Registration(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "boicp", version, about = "Global point-cloud registration with BO-ICP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Register a source cloud onto a reference cloud.
    Align(align::AlignArgs),
    /// Select pairs from a sequence and benchmark methods over seeds.
    Bench(bench::BenchArgs),
    /// Write synthetic data sets.
    #[command(hide = true)]
    Synth(synth_cmd::SynthArgs),
}

/// Parses `args` (including the program name) and runs the command.
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
    let outcome = match cli.command {
        Command::Align(a) => align::run(a),
        Command::Bench(b) => bench::run(b),
        Command::Synth(s) => synth_cmd::run(s),
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

/// `main` for the binary.
pub fn main_exit() -> ExitCode {
    ExitCode::from(run(std::env::args_os()) as u8)
}
