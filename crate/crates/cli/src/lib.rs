//! `larvactl`: run equilibria, closed-loop simulations, condition checks and
//! solver cross-checks from scenario files.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use larva_core::ControllerKind;

mod commands;
pub mod manifest;
pub mod pipeline;
pub mod svg;
pub mod table;

pub use manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "larvactl", version, about = "Age-structured mosquito population control toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the steady state and tabulate its profiles and kernels.
    Equilibrium(EquilibriumArgs),
    /// Closed-loop run with the static or stabilizing law (or any law via --controller).
    Simulate(SimulateArgs),
    /// Closed-loop run with the saturated tracking law.
    Track(TrackArgs),
    /// Stability conditions, kernel conditions and reference admissibility.
    Check(CheckArgs),
    /// Compare the transformed dynamics against the direct solver.
    OracleCompare(OracleArgs),
    /// Write the built-in scenario files, optionally running them.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Precision {
    #[default]
    F64,
    F32,
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    pub scenario: PathBuf,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the number of age intervals.
    #[arg(long)]
    pub intervals: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    pub precision: Precision,
}

#[derive(Debug, Args)]
pub struct RunOptions {
    pub scenario: PathBuf,
    /// CSV destination; falls back to the scenario's output section, then stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Append Lyapunov diagnostics columns.
    #[arg(long)]
    pub diag: bool,
    /// Override the scenario horizon.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub intervals: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    pub precision: Precision,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunOptions,
    /// Control law; the scenario's variant when omitted.
    #[arg(long, value_parser = parse_controller)]
    pub controller: Option<ControllerKind>,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    #[command(flatten)]
    pub run: RunOptions,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub scenario: PathBuf,
    /// Search for the largest decay weight satisfying the kernel conditions.
    #[arg(long)]
    pub h6_search: bool,
    /// Per-sample condition table.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub scenario: PathBuf,
    #[arg(long, value_parser = parse_controller)]
    pub controller: Option<ControllerKind>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub intervals: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    #[arg(long, default_value = "fixtures")]
    pub dir: PathBuf,
    /// Also run every fixture, writing CSV and SVG next to it.
    #[arg(long)]
    pub run: bool,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

fn parse_controller(s: &str) -> Result<ControllerKind, String> {
    s.parse()
}

/// Failure of a subcommand, classified for the exit code.
#[derive(Debug)]
pub enum CliError {
    Core(larva_core::Error),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_INVALID,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Usage(s) => f.write_str(s),
        }
    }
}

impl From<larva_core::Error> for CliError {
    fn from(e: larva_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Parses `args` (program name first) and runs the subcommand; returns the exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("larvactl: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Equilibrium(a) => commands::equilibrium::run(&a),
        Command::Simulate(a) => commands::simulate::run_simulate(&a),
        Command::Track(a) => commands::simulate::run_track(&a),
        Command::Check(a) => commands::check::run(&a),
        Command::OracleCompare(a) => commands::oracle::run(&a),
        Command::Fixtures(a) => commands::fixtures::run(&a),
    }
}
