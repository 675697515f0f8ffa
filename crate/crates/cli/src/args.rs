use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "qdiscrim", version, about = "Minimum-error state discrimination and the no-measurement test")]
pub struct Cli {
    /// Upper bound on worker threads for solver restarts and simulations.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an ensemble file against the state and prior invariants.
    Validate {
        ensemble: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Decide whether guessing the likeliest hypothesis is optimal (exit 0) or not (exit 3).
    CheckNoMeasurement {
        ensemble: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate the minimum-error conditions for a given POM.
    CheckOptimal {
        ensemble: PathBuf,
        pom: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the failure probability D/(D+N) above which guessing is optimal.
    Threshold {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        dim: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        num_signals: u64,
    },
    /// Search numerically for a minimum-error POM.
    Optimize {
        ensemble: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
        restarts: u64,
        #[arg(long, default_value_t = 5000, value_parser = clap::value_parser!(u64).range(1..))]
        max_iterations: u64,
        /// Also write the best POM to this file.
        #[arg(long)]
        pom_out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Monte Carlo error rate of a strategy.
    Simulate {
        ensemble: PathBuf,
        #[command(flatten)]
        strategy: Strategy,
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Mutual information and Bayes posteriors for a strategy.
    Info {
        ensemble: PathBuf,
        #[command(flatten)]
        strategy: Strategy,
        #[arg(long)]
        json: bool,
    },
    /// Write the three-state qubit channel example.
    Trine {
        #[arg(long)]
        p0: f64,
        /// Ensemble file to write.
        #[arg(long)]
        out: PathBuf,
        /// Optional channel spec file to write.
        #[arg(long)]
        spec_out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Strategy {
    /// POM file.
    pub pom: Option<PathBuf>,
    /// Always answer this hypothesis (no measurement).
    #[arg(long)]
    pub guess: Option<usize>,
}
