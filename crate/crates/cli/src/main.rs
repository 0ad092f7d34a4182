mod args;
mod commands;
mod input;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;

/// Exit 1: malformed input (arguments, JSON, schema). Exit 2: well-formed
/// input that violates a precondition of the requested computation.
#[derive(Debug)]
pub enum Failure {
    Schema(String),
    Precondition(String),
}

impl From<cantor_bayes::Error> for Failure {
    fn from(e: cantor_bayes::Error) -> Self {
        if e.is_schema_error() {
            Failure::Schema(e.to_string())
        } else {
            Failure::Precondition(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Schema(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Precondition(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
