//! Command-line front end for the `pcs` binary.
//!
//! Exit codes: 0 success, 1 invalid configuration or input, 2 solver failure
//! rate above the configured threshold.

pub mod commands;
pub mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "pcs",
    version,
    about = "Sparse recovery under structured matrix perturbation"
)]
pub struct Cli {
    /// Master seed; overrides the seed in a config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Experiment config (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw one problem instance and write its matrices and vectors.
    Gen(GenArgs),
    /// Run one recovery strategy on an instance directory.
    Solve(SolveArgs),
    /// Restricted isometry constant of a matrix file.
    Ric(RicArgs),
    /// Duplicate restricted isometry constant of `[A, B]`.
    Drip(DripArgs),
    /// Recovery conditions and error-bound constants.
    Bounds(BoundsArgs),
    /// Off-grid DOA Monte Carlo run.
    Doa(ExperimentArgs),
    /// Monte Carlo sweep over one parameter.
    Sweep(ExperimentArgs),
    /// Render a result CSV as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 80)]
    pub m: usize,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0.1)]
    pub r: f64,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// unit-spikes or positive-spikes.
    #[arg(long, default_value = "unit-spikes")]
    pub signal: String,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Directory written by `gen`.
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long, default_value = "aa")]
    pub strategy: String,
    /// Noise bound; defaults to the one recorded by `gen`.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Perturbation radius; defaults to the one recorded by `gen`.
    #[arg(long)]
    pub r: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RicArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Sample this many random supports instead of enumerating all of them.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Largest number of supports exact mode may enumerate.
    #[arg(long)]
    pub budget: Option<u128>,
}

#[derive(Debug, Args)]
pub struct DripArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub budget: Option<u128>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BoundKind {
    Sparse,
    Compressible,
    Baseline,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, value_enum, default_value = "sparse")]
    pub kind: BoundKind,
    /// Isometry constant (δ̄ for sparse/compressible, δ for baseline).
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    /// Spectral norm of `[A, B]`.
    #[arg(long, default_value_t = 1.0)]
    pub psi_norm: f64,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Relative perturbation ratio for the baseline bound.
    #[arg(long, default_value_t = 0.0)]
    pub eps_ratio: f64,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Built-in experiment; ignored when `--config` is given.
    #[arg(long)]
    pub preset: Option<String>,
    /// Run trials one after another instead of in parallel.
    #[arg(long)]
    pub sequential: bool,
    /// Also write the key-value summary next to the CSV.
    #[arg(long)]
    pub summary: bool,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Sweep or DOA CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub title: Option<String>,
    /// Grid size for the ±1/n markers of a DOA histogram.
    #[arg(long)]
    pub n: Option<usize>,
}

/// Runs a parsed command line and maps errors to exit status 1.
pub fn main_with(cli: Cli) -> ExitCode {
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_after_subcommand() {
        let cli =
            Cli::try_parse_from(["pcs", "sweep", "--preset", "fig2-desk", "--seed", "4", "--threads", "2"]).unwrap();
        assert_eq!(cli.seed, Some(4));
        assert_eq!(cli.threads, Some(2));
        let Command::Sweep(args) = cli.command else { panic!() };
        assert_eq!(args.preset.as_deref(), Some("fig2-desk"));
        assert!(!args.sequential);
    }

    #[test]
    fn defaults_and_rejections() {
        let cli = Cli::try_parse_from(["pcs", "bounds", "--delta", "0.1"]).unwrap();
        let Command::Bounds(b) = cli.command else { panic!() };
        assert_eq!((b.kind, b.r, b.psi_norm, b.k), (BoundKind::Sparse, 0.0, 1.0, 1));
        assert!(Cli::try_parse_from(["pcs", "bounds"]).is_err());
        assert!(Cli::try_parse_from(["pcs", "bounds", "--delta", "0.1", "--kind", "odd"]).is_err());
        assert!(Cli::try_parse_from(["pcs", "ric", "--matrix", "a.csv"]).is_err());
    }
}
