use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

mod commands;
mod config;
mod output;

use config::{Command, Opts, RunConfig};

/// Chaos expansions of powers of Levy increments: coefficient tables,
/// orthogonalization, simulation and pathwise verification.
#[derive(Debug, Parser)]
#[command(name = "levy-chaos", version)]
struct Cli {
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// C^(k) and Pi tables for a model.
    Coeffs(Opts),
    /// Expansion in the chosen basis (y, h, jamshidian, prm).
    Expand(Opts),
    /// Gram-Schmidt coefficients a and their inverse b.
    Ortho(Opts),
    /// Simulated grid path(s) as CSV.
    Simulate(Opts),
    /// Grid verification: report plus diff CSV.
    Verify(Opts),
    /// Verification over a dt sweep on one coupled path.
    Convergence(Opts),
    /// Exact check on a finite-jump path fixture.
    ExactVerify(Opts),
    /// Taylor truncation study of a functional.
    Taylor(Opts),
}

impl Sub {
    fn split(self) -> (Command, Opts) {
        match self {
            Sub::Coeffs(o) => (Command::Coeffs, o),
            Sub::Expand(o) => (Command::Expand, o),
            Sub::Ortho(o) => (Command::Ortho, o),
            Sub::Simulate(o) => (Command::Simulate, o),
            Sub::Verify(o) => (Command::Verify, o),
            Sub::Convergence(o) => (Command::Convergence, o),
            Sub::ExactVerify(o) => (Command::ExactVerify, o),
            Sub::Taylor(o) => (Command::Taylor, o),
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Core(levy_chaos::Error),
    Config(String),
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }

    fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Config(_) => "cli.invalid_config",
            CliError::Io(_) => "cli.io",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Config(m) | CliError::Io(m) => m.clone(),
        }
    }
}

impl From<levy_chaos::Error> for CliError {
    fn from(e: levy_chaos::Error) -> Self {
        CliError::Core(e)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (command, flags) = match cli.command {
        Some(sub) => {
            let (c, o) = sub.split();
            (Some(c), o)
        }
        None => (None, Opts::default()),
    };
    let cfg = RunConfig::resolve(command, flags, cli.config.as_deref())?;
    let artifacts = commands::run(&cfg)?;
    output::emit(artifacts)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = json!({ "error": { "code": e.code(), "message": e.message() } });
            let _ = writeln!(std::io::stderr(), "{body}");
            ExitCode::from(2)
        }
    }
}
