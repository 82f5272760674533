use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use coderank::algorithms::{DEFAULT_BETA, DEFAULT_EPSILON, DEFAULT_MAX_ITERATIONS, DEFAULT_THRESHOLD};
use coderank::metrics::DEFAULT_RELEVANT_FRACTION;
use coderank::{AlgorithmConfig, AlgorithmKind, RatingMode};
use coderank_cli::commands::{self, RunOptions};
use coderank_cli::config::Overrides;
use coderank_cli::formats::ScaleSpec;

#[derive(Parser)]
#[command(
    name = "coderank",
    version,
    about = "Reputation algorithms on rating data: generate datasets, run algorithms, sweep parameters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Aa,
    Mizz,
    Yzlm,
    Dkvd,
}

impl From<Algorithm> for AlgorithmKind {
    fn from(a: Algorithm) -> Self {
        match a {
            Algorithm::Aa => AlgorithmKind::Aa,
            Algorithm::Mizz => AlgorithmKind::Mizz,
            Algorithm::Yzlm => AlgorithmKind::Yzlm,
            Algorithm::Dkvd => AlgorithmKind::Dkvd,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Continuous,
    Discrete,
}

impl From<Mode> for RatingMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Continuous => RatingMode::Continuous,
            Mode::Discrete => RatingMode::Discrete,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate an artificial dataset with ground truth
    Generate {
        /// TOML or JSON config with a [generator] section, or a manifest
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Run one algorithm on a dataset directory
    Run {
        /// Directory holding ratings.tsv and optionally true_quality.tsv and user_error.tsv
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "yzlm")]
        algorithm: Algorithm,
        #[arg(long, default_value_t = DEFAULT_BETA)]
        beta: f64,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        /// Convergence threshold on the RMS change of the quality vector
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        delta: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
        max_iters: usize,
        /// Overrides the r_max of the ratings file header
        #[arg(long)]
        r_max: Option<u32>,
        /// Overrides the mode of the ratings file header
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long, default_value_t = DEFAULT_RELEVANT_FRACTION)]
        relevant_fraction: f64,
    },
    /// Run a parameter sweep and write sweep.csv
    Sweep {
        /// TOML or JSON experiment config, or a manifest
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        realizations: Option<usize>,
        /// Worker threads; defaults to one per core
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Generate {
            config,
            out,
            seed,
            mode,
        } => {
            let overrides = Overrides {
                seed,
                mode: mode.map(Into::into),
                ..Overrides::default()
            };
            commands::generate(&config, &out, overrides)?;
        }
        Command::Run {
            input,
            out,
            algorithm,
            beta,
            epsilon,
            delta,
            max_iters,
            r_max,
            mode,
            relevant_fraction,
        } => {
            let algorithm = AlgorithmConfig {
                kind: algorithm.into(),
                beta,
                epsilon,
                convergence_threshold: delta,
                max_iterations: max_iters,
            };
            let options = RunOptions {
                scale: ScaleSpec {
                    r_max,
                    mode: mode.map(Into::into),
                },
                relevant_fraction,
                ..RunOptions::new(&input, &out, algorithm)
            };
            let report = commands::run(&options)?;
            if !report.converged {
                eprintln!(
                    "warning: {} did not converge in {} iterations (last change {:e})",
                    report.label, report.iterations_used, report.final_delta
                );
            }
        }
        Command::Sweep {
            config,
            out,
            seed,
            realizations,
            workers,
        } => {
            let overrides = Overrides {
                seed,
                realizations,
                workers,
                mode: None,
            };
            commands::sweep(&config, &out, overrides)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
