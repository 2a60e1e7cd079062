//! `nvortex`: simulations, equilibria, reduction and orbit searches for the
//! planar point-vortex problem, driven by JSON configurations.
//!
//! Exit codes: 0 success, 2 configuration error, 3 integration or solver
//! failure, 4 no orbit converged.

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nvortex::VortexError;

#[derive(Parser)]
#[command(name = "nvortex", version, about = "Planar point-vortex dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration of the run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created on success.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    plot: bool,
    /// Overrides the seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel searches.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate the flow and write the trajectory and drift report.
    Simulate,
    /// Solve for normalised relative equilibria from given guesses.
    Equilibria,
    /// Multistart census of equilibrium energy levels.
    Census,
    /// Build the reduction matrix and check round trips.
    Reduce,
    /// Shoot for relative periodic orbits or scan energy levels.
    Orbit,
    /// Shoot for cyclically symmetric relative periodic orbits.
    Sym,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Integration(String),
    Failure(String),
}

impl CliError {
    pub fn config(e: VortexError) -> Self {
        CliError::Config(e.to_string())
    }

    /// Errors raised while computing; bad parameters still count as
    /// configuration errors.
    pub fn from_core(e: VortexError) -> Self {
        match e {
            VortexError::InvalidVorticity(_)
            | VortexError::DimensionMismatch { .. }
            | VortexError::InvalidParameter(_)
            | VortexError::NotCentred(_)
            | VortexError::VorticityDomain(_) => CliError::Config(e.to_string()),
            VortexError::CollisionAt { .. }
            | VortexError::NonConvergence { .. }
            | VortexError::StepLimit { .. } => CliError::Integration(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Integration(_) | CliError::Failure(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Integration(m) | CliError::Failure(m) => m,
        }
    }
}

fn run(cli: &Cli) -> Result<commands::Run, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Failure(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate => commands::simulate(&text, cli.seed, cli.plot),
        Command::Equilibria => commands::equilibria(&text, cli.seed),
        Command::Census => commands::census_cmd(&text, cli.seed),
        Command::Reduce => commands::reduce_cmd(&text),
        Command::Orbit => commands::orbit(&text, cli.seed, cli.plot),
        Command::Sym => commands::sym(&text, cli.plot),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|r| r.outputs.write(&cli.out).map(|p| (r, p))) {
        Ok((r, paths)) => {
            println!("{}", r.summary);
            for p in paths {
                println!("wrote {}", p.display());
            }
            if r.no_orbit {
                eprintln!("error: no orbit converged");
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
