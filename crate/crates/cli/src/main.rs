use std::path::PathBuf;
use std::process::ExitCode;

use bpr_cli::commands::{
    cmd_reconstruct, cmd_simulate, compare_rows, load_sim_config, render_csv, render_text, ReconstructArgs,
};
use bpr_cli::sim::read_json;
use bpr_cli::{CliError, CliResult};
use bpr_core::SolverConfig;
use clap::{Parser, Subcommand};

/// Blind phase retrieval: simulate data, reconstruct, compare.
#[derive(Parser)]
#[command(name = "bpr", version)]
struct Cli {
    /// Worker threads for the solver internals.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write phaseless data and ground truth for a simulated scenario.
    Simulate {
        /// Simulation config (JSON); the built-in default scenario if absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Ignore any Poisson scale in the config.
        #[arg(long)]
        noiseless: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one solver on a simulated data set.
    Reconstruct {
        /// Data set directory written by `simulate`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        algorithm: String,
        /// Solver config (JSON, `SolverConfig` field names).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Start from the final estimate of an earlier report.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate aligned errors of reports against ground truth.
    Compare {
        /// Data set directory holding the ground truth.
        #[arg(long)]
        truth: PathBuf,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Add the ground truth itself as a reference row.
        #[arg(long)]
        include_truth: bool,
        reports: Vec<PathBuf>,
    },
}

fn execute(cli: Cli) -> CliResult<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))?;
    match cli.command {
        Command::Simulate { config, seed, noiseless, out } => {
            let cfg = load_sim_config(config.as_deref())?;
            cmd_simulate(&cfg, seed, noiseless, &out)
        }
        Command::Reconstruct { input, algorithm, config, seed, max_iter, tol, resume, out } => {
            let mut cfg: SolverConfig = match config {
                Some(p) => read_json(&p)?,
                None => SolverConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(m) = max_iter {
                cfg.max_iter = m;
            }
            if let Some(t) = tol {
                cfg.tol = t;
            }
            cmd_reconstruct(&ReconstructArgs { input, algorithm, config: cfg, out, resume })
        }
        Command::Compare { truth, csv, include_truth, reports } => {
            let rows = compare_rows(&truth, &reports, include_truth)?;
            print!("{}", render_text(&rows));
            if let Some(path) = csv {
                std::fs::write(&path, render_csv(&rows)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
