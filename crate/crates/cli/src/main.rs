//! `musielak solve|verify|analyze|denoise <config> [--trace] [--seed N] [--out DIR]`
//!
//! Exit codes: 0 ok, 1 verification failure, 2 config/input error,
//! 3 runtime diagnostic.

mod commands;
mod config;
mod expr;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{Command, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("runtime diagnostic: {0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

pub fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "musielak", version, about = "Musielak-Orlicz analysis and nonlocal singular Kirchhoff solver")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// INI run configuration.
    config: PathBuf,
    /// Also write per-iteration traces.
    #[arg(long)]
    trace: bool,
    /// Overrides every seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Minimize the energy and write u_star.csv and report.json.
    Solve(Common),
    /// Run the invariant battery and write verify.txt and verify.json.
    Verify(Common),
    /// Estimate indices and tabulate the conjugate into analysis.json.
    Analyze(Common),
    /// Restore a PGM image by variable-exponent energy descent.
    Denoise(Common),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (command, args) = match cli.command {
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Analyze(a) => (Command::Analyze, a),
        Cmd::Denoise(a) => (Command::Denoise, a),
    };
    let cfg = RunConfig::load(&args.config, command, args.seed)?;
    let out = output::OutDir::create(&args.out)?;
    match command {
        Command::Solve => commands::solve(&cfg, &out, args.trace),
        Command::Verify => commands::verify(&cfg, &out),
        Command::Analyze => commands::analyze(&cfg, &out),
        Command::Denoise => commands::denoise(&cfg, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
