use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tng_core::plot::XAxis;
use tng_core::Error;

mod commands;

/// Run TNG gradient-compression experiments and plot their traces.
#[derive(Debug, Parser)]
#[command(name = "tng", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment; writes trace.csv and run_manifest.json.
    Run {
        /// Experiment config (or a run_manifest.json to replay).
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every grid cell for every seed; writes one subdirectory per run
    /// plus summary.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Runs only this seed instead of the config's `seeds` list.
        #[arg(long)]
        seed: Option<u64>,
        /// Maximum number of runs in flight.
        #[arg(long, env = "TNG_THREADS")]
        threads: Option<usize>,
    },
    /// Render trace CSVs as an SVG chart with a log-scale y axis.
    Plot {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
        /// `rounds` or `bits`.
        #[arg(long, default_value = "rounds")]
        x_axis: XAxis,
    },
}

/// 2 for bad input of any kind, 3 when the optimization itself blew up.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Numeric { .. } | Error::NonFinite { .. } | Error::NoConvergence { .. } => 3,
        Error::Inconsistent(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seed } => commands::run(&config, &out, seed),
        Command::Sweep {
            config,
            out,
            seed,
            threads,
        } => commands::sweep(&config, &out, seed, threads),
        Command::Plot { traces, out, x_axis } => commands::plot(&traces, &out, x_axis),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
