//! Command-line front end for `obtuse-core`.
//!
//! [`run`] parses arguments, executes one subcommand and returns the exit
//! status; all numeric output goes through [`output`].

pub mod args;
mod commands;
pub mod output;
pub mod payoff;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use thiserror::Error;

pub use args::Cli;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}")]
    Input(String),
    #[error("payoff: {0}")]
    Parse(#[from] payoff::ParseError),
    #[error("payoff: {0}")]
    Eval(#[from] payoff::EvalError),
    #[error(transparent)]
    Core(#[from] obtuse_core::Error),
}

impl CliError {
    /// 2 for malformed input, 1 for failures of well-formed input.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. }
            | CliError::Json { .. }
            | CliError::Csv { .. }
            | CliError::Input(_)
            | CliError::Parse(_) => 2,
            CliError::Eval(_) | CliError::Core(_) => 1,
        }
    }
}

/// Rendered result of a command; `ok == false` means a check failed.
pub struct Outcome {
    pub text: String,
    pub ok: bool,
}

/// Run with explicit arguments and return the process exit status.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::execute(&cli).and_then(|out| write_out(&cli, &out).map(|_| out.ok)) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn write_out(cli: &Cli, out: &Outcome) -> Result<(), CliError> {
    match &cli.global.out {
        Some(path) => std::fs::write(path, &out.text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(out.text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}
