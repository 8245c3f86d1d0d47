//! Sweep configuration, execution, output and slope fitting for the
//! `leakrep` command.

use std::path::PathBuf;

pub mod config;
pub mod fit;
pub mod sweep;

pub use config::{Cli, Format, SweepConfig};
pub use fit::{fit_slope, SlopeFit};
pub use sweep::{run_sweep, run_sweep_to_output, run_sweep_with, Row, RowWriter, CSV_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid {flag}: {message}")]
    Config { flag: &'static str, message: String },
    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },
    #[error("output failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("slope fit: {0}")]
    Fit(String),
    #[error(transparent)]
    Simulation(#[from] leakrep::Error),
}
