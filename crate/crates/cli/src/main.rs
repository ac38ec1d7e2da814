//! `rau`: spectra, propagator simulations and invariant checks for
//! PT-symmetric and spin two-level models.

// `!(x > y)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Range, SimulateArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A numerical failure after outputs were produced.
    #[error("numerical failure: {message}")]
    NumericalWithOutput { message: String, output: String },
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Verify(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) | CliError::NumericalWithOutput { .. } => 2,
            CliError::Verify(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rau", version, about = "Factorized propagators for time-dependent two-level Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectrum, PT phase and eigenvectors of the static PT-symmetric Hamiltonian.
    Eigen {
        #[arg(long, allow_hyphen_values = true)]
        r: f64,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        /// Print only the JSON report.
        #[arg(long)]
        json: bool,
    },
    /// Run a simulation; writes the CSV and prints the JSON summary.
    Simulate {
        config: PathBuf,
        /// CSV path (overrides `output.csv`).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Summary path (overrides `output.summary`).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Like `simulate` but emits only the CSV (to stdout unless a path is set).
    PlotData {
        config: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Tabulate the PT phase over a grid of static parameters.
    PhaseScan {
        /// `lo:hi:n`
        #[arg(long)]
        r: Range,
        #[arg(long)]
        s: Range,
        #[arg(long)]
        theta: Range,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the integrability condition for a proportional coupling family.
    MakharkoCheck { config: PathBuf },
    /// Run the invariant suite.
    Verify {
        /// Replace every tolerance with this value.
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        json: bool,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Eigen { r, s, theta, json } => commands::eigen(r, s, theta, json),
        Command::Simulate { config, csv, summary } => commands::simulate_cmd(SimulateArgs {
            config: &config,
            csv: csv.as_deref(),
            summary: summary.as_deref(),
            csv_only: false,
        }),
        Command::PlotData { config, csv } => {
            commands::simulate_cmd(SimulateArgs { config: &config, csv: csv.as_deref(), summary: None, csv_only: true })
        }
        Command::PhaseScan { r, s, theta, jobs, out } => {
            let csv = commands::phase_scan(r, s, theta, jobs.max(1))?;
            match out {
                Some(path) => std::fs::write(&path, csv)
                    .map(|_| String::new())
                    .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
                None => Ok(csv),
            }
        }
        Command::MakharkoCheck { config } => commands::makharko_check(&config),
        Command::Verify { tolerance, json } => commands::verify(tolerance, json),
    }
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn print(text: &str) {
    use std::io::Write;
    if text.is_empty() {
        return;
    }
    let mut out = std::io::stdout().lock();
    let newline = if text.ends_with('\n') { "" } else { "\n" };
    let _ = write!(out, "{text}{newline}").and_then(|_| out.flush());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RAU_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(text) => {
            print(&text);
            ExitCode::SUCCESS
        }
        Err(e) => {
            match &e {
                CliError::Verify(report) => print(report),
                CliError::NumericalWithOutput { output, .. } => print(output),
                _ => {}
            }
            if !matches!(e, CliError::Verify(_)) {
                eprintln!("rau: {e}");
            } else {
                eprintln!("rau: verification failed");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
