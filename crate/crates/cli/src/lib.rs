//! Subcommands of the `tapkit` binary. Every command is a pure function of
//! its arguments and input files; outputs land in `--out`.

// `!(x > 0.0)` style checks deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod analyze;
mod output;
mod paths;
mod simulate;
mod synth;
mod transitions;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use tapkit::constraints::DEFAULT_WINDOW;

pub use analyze::AnalyzeArgs;
pub use paths::PathsArgs;
pub use simulate::SimulateArgs;
pub use synth::SynthArgs;
pub use transitions::TransitionsArgs;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_INSUFFICIENT: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    InsufficientData(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::InsufficientData(_) => EXIT_INSUFFICIENT,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "tapkit", version, about = "Adjacent-possible growth simulation and model-trace analysis")]
pub struct Cli {
    /// Directory that receives every output file.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Seed for synthetic generation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Attention positions used for the contextual constraint δ.
    #[arg(long, global = true, default_value_t = DEFAULT_WINDOW, value_parser = parse_window)]
    pub window: usize,

    /// Also emit long-format CSVs for plotting.
    #[arg(long, global = true)]
    pub plot_data: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iterate a growth model and write trajectory.csv.
    Simulate(SimulateArgs),
    /// Per-group constraint metrics from a trace file; writes constraints.csv.
    Analyze(AnalyzeArgs),
    /// Threshold, power-law, correlation and stability statistics; writes transitions.json.
    Transitions(TransitionsArgs),
    /// Normal vs shuffled path metrics; writes paths.csv.
    Paths(PathsArgs),
    /// Generate a seeded synthetic trace file.
    Synth(SynthArgs),
}

fn parse_window(s: &str) -> Result<usize, String> {
    let w: usize = s.parse().map_err(|e| format!("{e}"))?;
    if w < 2 {
        return Err(format!("window must be at least 2, got {w}"));
    }
    Ok(w)
}

/// Runs one command and returns the lines to print on stdout.
pub fn run(cli: &Cli) -> CliResult<Vec<String>> {
    output::prepare_out_dir(&cli.out)?;
    match &cli.command {
        Command::Simulate(args) => simulate::run(cli, args),
        Command::Analyze(args) => analyze::run(cli, args),
        Command::Transitions(args) => transitions::run(cli, args),
        Command::Paths(args) => paths::run(cli, args),
        Command::Synth(args) => synth::run(cli, args),
    }
}
