//! Experiment runner for the weak-measurement reversal protocol: parameter
//! sweeps, critical damping curves and the cross-engine oracle suite, all
//! written as CSV.

pub mod config;
pub mod experiments;
pub mod oracle;
pub mod output;

pub use config::{ExperimentConfig, ExperimentKind, FileConfig, PGrid};
pub use experiments::{run_experiment, RunSummary};
pub use output::{CsvRow, CsvSink};

/// Thread count override read at startup.
pub const THREADS_ENV: &str = "WMR_THREADS";

/// Runs `cfg`, writing CSV to its output path or to stdout.
pub fn run_to_output(cfg: &ExperimentConfig) -> anyhow::Result<RunSummary> {
    let mut sink = CsvSink::create(cfg.output_path.as_deref())?;
    let summary = run_experiment(cfg, &mut sink)?;
    sink.finish()?;
    Ok(summary)
}
