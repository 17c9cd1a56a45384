use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use wmr_cli::{run_to_output, ExperimentConfig, ExperimentKind, FileConfig, THREADS_ENV};

#[derive(Parser)]
#[command(name = "wmr", version, about = "Sweeps and critical curves for weak-measurement protected GHZ states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one experiment over its grid and write CSV.
    Run {
        experiment: Option<ExperimentKind>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Run the oracle suite; exits nonzero if any check misses its tolerance.
    Verify {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Critical damping values against n for one measure.
    Critical {
        measure: Measure,
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    Ln,
    Mw,
}

#[derive(Args)]
struct GridArgs {
    /// Qubit counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Weak measurement strengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    s: Option<Vec<f64>>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    p_start: Option<f64>,
    #[arg(long)]
    p_stop: Option<f64>,
    #[arg(long)]
    p_step: Option<f64>,
    /// Bipartition size (default n/2).
    #[arg(long)]
    m: Option<usize>,
    /// CSV destination (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file with the same keys; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl GridArgs {
    fn resolve(self, experiment: Option<ExperimentKind>) -> anyhow::Result<ExperimentConfig> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let flags = FileConfig {
            experiment,
            n: self.n,
            s: self.s,
            theta: self.theta,
            p_start: self.p_start,
            p_stop: self.p_stop,
            p_step: self.p_step,
            m: self.m,
            out: self.out,
        };
        ExperimentConfig::resolve(file.overlay(flags))
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let k: usize = v.parse().with_context(|| format!("{THREADS_ENV}={v} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let (experiment, grid) = match cli.command {
        Command::Run { experiment, grid } => (experiment, grid),
        Command::Verify { grid } => (Some(ExperimentKind::OracleSuite), grid),
        Command::Critical { measure, grid } => {
            let kind = match measure {
                Measure::Ln => ExperimentKind::CriticalLn,
                Measure::Mw => ExperimentKind::CriticalMw,
            };
            (Some(kind), grid)
        }
    };
    let cfg = match grid.resolve(experiment) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    eprint!("{}", cfg.describe());
    match run_to_output(&cfg) {
        Ok(summary) => {
            eprint!("{}", summary.describe());
            if summary.oracle_failures > 0 {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
