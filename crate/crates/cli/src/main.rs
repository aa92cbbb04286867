mod commands;
mod config;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::CliError;
use crate::config::{ConfigError, Instance};

/// Gabor frame analysis in Walnut form.
#[derive(Parser)]
#[command(name = "gabor-walnut", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `[run] out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random trials; overrides `[run] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Solver tolerance; overrides `[run] tol`.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Frame bounds, Walnut multipliers, amalgam norms and the boundedness ratio.
    Analyze,
    /// Canonical dual window with its multiplier summability report.
    Dual,
    /// Canonical tight window.
    Tight,
    /// Mixed-bracket identity and norm estimate for a window pair.
    Verify,
    /// Orthogonal non-amalgam signal and its amalgam growth.
    Counterexample,
    /// Weighted bracket sums of the dual window at both periods.
    Conjecture,
    /// Direct vs Walnut application timings.
    Bench,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("GW_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError::Invalid(format!("GW_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError::Invalid(format!("cannot size thread pool: {e}")))?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let path = cli
        .config
        .ok_or_else(|| ConfigError::Invalid("--config <path> is required".into()))?;
    let mut cfg = config::load(&path)?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(tol) = cli.tol {
        cfg.run.tol = tol;
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let inst = Instance::new(cfg, base)?;
    let out = commands::output_dir(&inst, cli.out)?;
    match cli.command {
        Command::Analyze => commands::analyze(&inst, &out),
        Command::Dual => commands::dual(&inst, &out),
        Command::Tight => commands::tight(&inst, &out),
        Command::Verify => commands::verify(&inst, &out),
        Command::Counterexample => commands::counterexample(&inst, &out),
        Command::Conjecture => commands::conjecture(&inst, &out),
        Command::Bench => commands::bench(&inst, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
