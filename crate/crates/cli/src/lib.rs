//! Library face of the `instrux` binary, exposed so integration tests can
//! drive commands in-process.
//!
//! Exit codes: 0 success, 1 validation/config/data problems, 2 backend
//! failures, 3 fallback-threshold breach in `convert --mode llm`.

pub mod args;
pub mod commands;
pub mod manifest;

pub use args::{Cli, Command};

use instrux_core::error::{Error, Result};

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Backend(_) => 2,
        _ => 1,
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Convert(args) => commands::convert::run(&cli.globals, args),
        Command::Evaluate(args) => commands::evaluate::run(&cli.globals, args),
        Command::Filter(args) => commands::filter::run(&cli.globals, args),
        Command::Mix(args) => commands::mix::run(&cli.globals, args),
        Command::Distill(args) => commands::distill::run(&cli.globals, args),
        Command::Report(args) => commands::report::run(args),
    }
}

/// Run a parsed command line, translating errors into exit codes.
pub fn run(cli: &Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}
