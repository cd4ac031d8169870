//! `wordgrowth`: runs one experiment per invocation and writes a JSON or CSV
//! artifact. Exit codes: 0 success, 2 invalid configuration, 3 computation
//! error, 4 a checked inequality failed.

mod artifact;
mod commands;
mod config;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::artifact::Outcome;

#[derive(Parser, Debug)]
#[command(
    name = "wordgrowth",
    version,
    about = "Growth experiments on monomial algebras and wreath products"
)]
pub struct Cli {
    /// Artifact path; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seed for randomized operations.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; every operation currently runs on one.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Experiment file naming a subcommand and its parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Factor complexity of a word.
    Complexity(commands::ComplexityArgs),
    /// Set-building construction of words with prescribed complexity.
    Sbm(commands::SbmArgs),
    /// Oscillating stage schedule and exact map growth.
    Oscillate(commands::OscillateArgs),
    /// Wreath-product growth bounds or the decomposition identity.
    Wreath(commands::WreathArgs),
    /// Euler product and enveloping-algebra growth.
    Pbw(commands::PbwArgs),
    /// Rate sequences, Toeplitz words and their envelopes.
    Toeplitz(commands::ToeplitzArgs),
    /// GK-dimension estimate of a growth table.
    Gkdim(commands::GkdimArgs),
    /// Slow and fast hits of a growth table against two bounds.
    Oscillation(commands::OscillationArgs),
    /// Composed growth bounds for the realizing and oscillating theorems.
    Pipeline(commands::PipelineArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Complexity(_) => "complexity",
            Command::Sbm(_) => "sbm",
            Command::Oscillate(_) => "oscillate",
            Command::Wreath(_) => "wreath",
            Command::Pbw(_) => "pbw",
            Command::Toeplitz(_) => "toeplitz",
            Command::Gkdim(_) => "gkdim",
            Command::Oscillation(_) => "oscillation",
            Command::Pipeline(_) => "pipeline",
        }
    }
}

/// Failure of a run, mapped onto the exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(wordgrowth::Error),
}

impl From<wordgrowth::Error> for CliError {
    fn from(e: wordgrowth::Error) -> Self {
        CliError::Compute(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(e) => {
                let mut root = e;
                while let wordgrowth::Error::InStage { source, .. } = root {
                    root = source;
                }
                match root {
                    wordgrowth::Error::InvalidArgument(_) => 2,
                    _ => 3,
                }
            }
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(m) => format!("invalid config: {m}"),
            CliError::Compute(e) if self.exit_code() == 2 => format!("invalid config: {e}"),
            CliError::Compute(e) => format!("computation error: {e}"),
        }
    }
}

/// Everything a run depends on, embedded into JSON artifacts.
#[derive(Debug, Serialize)]
struct RunConfig<'a> {
    format: Format,
    seed: Option<u64>,
    #[serde(flatten)]
    command: &'a Command,
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    if cli.threads == 0 {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    let command = cli
        .command
        .clone()
        .ok_or_else(|| CliError::Config("no subcommand given".into()))?;
    let outcome = commands::execute(&command, cli.seed)?;
    let run_config = RunConfig {
        format: cli.format,
        seed: cli.seed,
        command: &command,
    };
    let bytes = artifact::render(cli.format, &run_config, &outcome)?;
    artifact::write(cli.out.as_deref(), &bytes).map_err(|e| CliError::Config(format!("cannot write artifact: {e}")))?;
    eprintln!("{}: {}", command.name(), outcome.summary);
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cli = match cli.config.clone() {
        Some(path) => match config::load(&path, &cli) {
            Ok(cli) => cli,
            Err(e) => {
                eprintln!("{}", e.message());
                return ExitCode::from(e.exit_code());
            }
        },
        None => cli,
    };
    match run(cli) {
        Ok(outcome) if outcome.check_failed => {
            eprintln!("CHECK FAILED: {}", outcome.summary);
            ExitCode::from(4)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
