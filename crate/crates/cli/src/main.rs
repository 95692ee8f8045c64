mod commands;
mod config;
mod emit;

use std::process::ExitCode;

use clap::Parser;

use crate::commands::Command;
use crate::config::{GlobalArgs, RunConfig};

/// Right-angled Coxeter groups, Vinberg representations and gap diagnostics.
#[derive(Parser, Debug)]
#[command(name = "racg", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config values or inputs; exit code 2.
    Usage(String),
    /// A library error; exit code 1.
    Domain(racg::Error),
    Io(String),
}

impl From<racg::Error> for CliError {
    fn from(e: racg::Error) -> Self {
        CliError::Domain(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {}", m),
            CliError::Domain(e) => write!(f, "{}", e),
            CliError::Io(m) => write!(f, "i/o error: {}", m),
        }
    }
}

fn thread_count(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(n) = flag {
        return if n == 0 { Err(CliError::Usage("--threads must be positive".into())) } else { Ok(n) };
    }
    match std::env::var("RACG_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Usage(format!("RACG_THREADS must be a positive integer, got {:?}", v))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let threads = thread_count(cli.global.threads)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Io(format!("thread pool: {}", e)))?;
    let cfg = RunConfig::load(&cli.global)?;
    commands::dispatch(&cli.command, &cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("racg: {}", e);
            ExitCode::from(match e {
                CliError::Usage(_) => 2,
                CliError::Domain(_) | CliError::Io(_) => 1,
            })
        }
    }
}
