//! `sfl`: spectra, phase diagrams, scaling studies and eigenstate profiles
//! for tight-binding rings with one non-Hermitian defect.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Format, Method, Overrides, Range, RunConfig, Selector, Settings};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or unusable output location (exit 2).
    Config(String),
    /// A solver or state-selection failure (exit 3).
    Solver(String),
    /// Acceptance criteria that did not pass (exit 1).
    Verify(Vec<u8>),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Verify(ids) => write!(f, "failed criteria: {ids:?}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sfl", version, about)]
struct Cli {
    /// JSON run configuration (model, method, tolerances, output, ranges).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Eigenvalue route for `spectrum` and `states`; the other commands
    /// always diagonalize densely.
    #[arg(long, global = true, value_enum)]
    method: Option<Method>,
    /// Relative threshold on |Im E| below which an energy counts as real.
    #[arg(long, global = true)]
    tol_real: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classified spectrum: spectrum.csv, plus match.json with --method both.
    Spectrum,
    /// Regime map over (delta, gamma): phase.csv.
    PhaseDiagram {
        /// start:stop:count
        #[arg(long)]
        delta: Option<Range>,
        /// start:stop:count
        #[arg(long)]
        gamma: Option<Range>,
    },
    /// One state followed across ring sizes: scaling.csv.
    Scaling {
        /// Ring sizes in sites, comma separated.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        /// largest-im, bound, all or index:K.
        #[arg(long)]
        select: Option<Selector>,
    },
    /// Site amplitudes of selected eigenstates: states.csv.
    States {
        /// largest-im, bound, all or index:K.
        #[arg(long)]
        select: Option<Selector>,
    },
    /// Run the acceptance suite and print one line per criterion.
    Verify,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let ov = Overrides { out: cli.out.clone(), format: cli.format, method: cli.method, tol_real: cli.tol_real };
    let settings = Settings::merge(file, ov)?;
    match cli.command {
        Command::Spectrum => commands::spectrum(&settings),
        Command::PhaseDiagram { delta, gamma } => commands::phase_diagram(&settings, delta, gamma),
        Command::Scaling { sizes, select } => commands::scaling(&settings, &sizes, select),
        Command::States { select } => commands::states(&settings, select),
        Command::Verify => commands::verify(&settings, cli.out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sfl: {e}");
            ExitCode::from(e.code())
        }
    }
}
