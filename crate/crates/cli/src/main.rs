//! `torwalk <command> --config <path> [--seed N] [--workers N] [--out DIR]`
//!
//! Exit codes: 0 success, 2 config error, 3 numerical non-convergence,
//! 4 Monte Carlo step cap reached, 1 anything else.

mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::commands::Overrides;
use crate::config::Command;
use crate::error::CliError;
use crate::report::RunMeta;

#[derive(Parser)]
#[command(name = "torwalk", version, about = "Hitting and coalescence times of random walks on the discrete torus")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact hitting-time Laplace transforms against their large-torus limit.
    Laplace(RunArgs),
    /// Distance of the heat kernel from uniform over a time grid.
    Uniformity(RunArgs),
    /// Limiting mean for the short/long-range mixture kernel.
    Beta0(RunArgs),
    /// Monte Carlo hitting times against the exact transform.
    Simulate(RunArgs),
    /// Coalescing walks: lineage-count law against the pure-death limit.
    Coalesce(RunArgs),
    /// Characteristic-function diagnostics over a range ladder.
    Conditions(RunArgs),
    /// Numerical audits of lattice sum bounds and limits.
    Audit(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `mc.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (default: `output.dir`, else the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Cmd {
    fn split(self) -> (Command, RunArgs) {
        match self {
            Cmd::Laplace(a) => (Command::Laplace, a),
            Cmd::Uniformity(a) => (Command::Uniformity, a),
            Cmd::Beta0(a) => (Command::Beta0, a),
            Cmd::Simulate(a) => (Command::Simulate, a),
            Cmd::Coalesce(a) => (Command::Coalesce, a),
            Cmd::Conditions(a) => (Command::Conditions, a),
            Cmd::Audit(a) => (Command::Audit, a),
        }
    }
}

fn execute(command: Command, args: RunArgs) -> Result<(), CliError> {
    let cfg = config::load(&args.config)?;
    let workers = match args.workers {
        Some(0) => return Err(CliError::Config("--workers must be positive".into())),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let ov = Overrides { seed: args.seed };
    let out = args
        .out
        .or_else(|| cfg.output.as_ref().and_then(|o| o.dir.as_ref()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    let started = Instant::now();
    let outcome = torwalk::mc::with_workers(workers, || commands::run(command, &cfg, ov))?;
    let elapsed_seconds = started.elapsed().as_secs_f64();

    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let meta = RunMeta {
        command: command.name(),
        config_path: &args.config,
        config: serde_json::to_value(&cfg).map_err(|e| CliError::Runtime(e.to_string()))?,
        seed: matches!(command, Command::Simulate | Command::Coalesce | Command::Audit)
            .then(|| commands::resolve_seed(&cfg, ov)),
        workers,
        elapsed_seconds,
    };
    let (csv, json) = report::write(&out, &outcome, &meta)?;
    println!("{} rows -> {} ({})", outcome.table.rows.len(), csv.display(), json.display());
    Ok(())
}

fn main() -> ExitCode {
    let (command, args) = Cli::parse().command.split();
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("torwalk {}: {e}", command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
