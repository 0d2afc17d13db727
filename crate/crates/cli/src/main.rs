//! `fixedbed simulate` runs a configured experiment; `fixedbed compare`
//! lines up one quantity from two runs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fixedbed::thermo::EosKind;
use thiserror::Error;

mod compare;
mod config;
mod run;
mod table;

use config::{Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("input: {0}")]
    Input(String),
    #[error("solver: {message}")]
    Solver { message: String, log: Vec<f64> },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Solver { .. } => 3,
            _ => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "fixedbed", version, about = "Fixed-bed reactor simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// ideal, srk or pr
        #[arg(long)]
        eos: Option<EosKind>,
        #[arg(long)]
        cells: Option<usize>,
        /// Tolerance for both steady and dynamic solves.
        #[arg(long)]
        tol: Option<f64>,
        /// Evaluate the heat of reaction on a (T, P) grid instead.
        #[arg(long)]
        heat_of_reaction: bool,
    },
    /// Difference table of one quantity between two result directories.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Column name without unit, e.g. X_out, T_out or dH.
        #[arg(long)]
        quantity: String,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn simulate(
    config: &PathBuf,
    out: &PathBuf,
    overrides: Overrides,
    heat_of_reaction: bool,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    cfg.apply(&overrides)?;
    run::simulate(&cfg, out, heat_of_reaction)
}

fn compare_runs(
    a: &PathBuf,
    b: &PathBuf,
    quantity: &str,
    out: Option<&PathBuf>,
) -> Result<(), CliError> {
    let t = compare::compare(a, b, quantity)?;
    if let Some(row) = compare::largest_difference(&t) {
        let d = t.header.len() - 2;
        eprintln!(
            "largest |diff| {:e} at {:?}",
            row[d].abs(),
            &row[..t.header.len() - 4]
        );
    }
    match out {
        Some(path) => t.write(path),
        None => t
            .write_to(std::io::stdout().lock())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            config,
            out,
            eos,
            cells,
            tol,
            heat_of_reaction,
        } => simulate(
            config,
            out,
            Overrides {
                eos: *eos,
                n_cells: *cells,
                tol: *tol,
            },
            *heat_of_reaction,
        ),
        Command::Compare {
            a,
            b,
            quantity,
            out,
        } => compare_runs(a, b, quantity, out.as_ref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Solver { log, .. } = &e {
                if !log.is_empty() {
                    eprintln!("iteration log: {log:?}");
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
