use std::path::PathBuf;

use clap::{Args, Parser, ValueEnum};
use leakrep::noise::{DEFAULT_DECAY_PROB, DEFAULT_LEAK_FACTOR};
use leakrep::{CodeParams, Mode, NoiseParams};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Everything that determines the rows of a sweep.
#[derive(Clone, Debug, PartialEq, Args)]
pub struct SweepConfig {
    /// Code distances (odd, at least 3).
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = vec![3, 5])]
    pub distances: Vec<usize>,

    /// Physical error rates p.
    #[arg(long = "p-values", value_delimiter = ',', num_args = 1.., default_values_t = vec![1e-3, 2e-3, 4e-3, 8e-3])]
    pub p_values: Vec<f64>,

    /// Noise models to run.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = vec![Mode::Plain])]
    pub modes: Vec<Mode>,

    /// Shots per cell.
    #[arg(long, default_value_t = 100_000)]
    pub shots: u64,

    /// Rounds per shot. Defaults to max(10, 3d).
    #[arg(long)]
    pub rounds: Option<usize>,

    /// Leakage probability per H or CZ, as a multiple of p.
    #[arg(long = "leak-factor", default_value_t = DEFAULT_LEAK_FACTOR)]
    pub leak_factor: f64,

    /// Per-gate probability that a leaked qubit returns to the code space.
    #[arg(long = "decay", default_value_t = DEFAULT_DECAY_PROB)]
    pub decay_prob: f64,

    /// Master seed shared by every cell.
    #[arg(long = "seed", default_value_t = 0)]
    pub master_seed: u64,

    /// Worker threads. Defaults to the number of available cores.
    #[arg(long)]
    pub workers: Option<usize>,

    /// Output file. Rows go to stdout when omitted.
    #[arg(long = "out")]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Parser)]
#[command(name = "leakrep", version, about = "Repetition-code logical error rates under leakage")]
pub struct Cli {
    #[command(flatten)]
    pub sweep: SweepConfig,

    /// Print the gate schedule of every (distance, mode) pair and exit.
    #[arg(long = "dump-schedule")]
    pub dump_schedule: bool,

    /// Print the matching graph of every (distance, p, mode) cell and exit.
    #[arg(long = "dump-graph")]
    pub dump_graph: bool,

    /// After the sweep, fit log p_round against log p over the K lowest
    /// usable points of each (mode, distance) and report on stderr.
    #[arg(long = "fit", value_name = "K")]
    pub fit: Option<usize>,
}

fn invalid(flag: &'static str, message: impl Into<String>) -> CliError {
    CliError::Config { flag, message: message.into() }
}

impl SweepConfig {
    /// Command-line arguments that parse back to this configuration.
    pub fn to_args(&self) -> Vec<String> {
        fn join<T: ToString>(xs: &[T]) -> String {
            xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
        }
        let mut args = vec![
            "--distances".to_string(),
            join(&self.distances),
            "--p-values".into(),
            join(&self.p_values),
            "--modes".into(),
            join(&self.modes),
            "--shots".into(),
            self.shots.to_string(),
            "--leak-factor".into(),
            self.leak_factor.to_string(),
            "--decay".into(),
            self.decay_prob.to_string(),
            "--seed".into(),
            self.master_seed.to_string(),
            "--format".into(),
            self.format.as_str().into(),
        ];
        if let Some(t) = self.rounds {
            args.extend(["--rounds".into(), t.to_string()]);
        }
        if let Some(w) = self.workers {
            args.extend(["--workers".into(), w.to_string()]);
        }
        if let Some(path) = &self.output {
            args.extend(["--out".into(), path.display().to_string()]);
        }
        args
    }

    pub fn parse_args<I, S>(args: I) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = S>,
        S: Into<std::ffi::OsString> + Clone,
    {
        let argv = std::iter::once("leakrep".into()).chain(args.into_iter().map(Into::into));
        Cli::try_parse_from(argv).map(|cli| cli.sweep)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.distances.is_empty() {
            return Err(invalid("--distances", "at least one distance is required"));
        }
        if let Some(&d) = self.distances.iter().find(|&&d| d < 3 || d % 2 == 0) {
            return Err(invalid("--distances", format!("distance {d} must be odd and at least 3")));
        }
        if self.p_values.is_empty() {
            return Err(invalid("--p-values", "at least one p is required"));
        }
        for &p in &self.p_values {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid("--p-values", format!("p = {p} is outside [0, 1]")));
            }
            if p == 0.0 {
                return Err(invalid(
                    "--p-values",
                    "p = 0 leaves every matching weight undefined (-ln 0); use a small positive p",
                ));
            }
        }
        if self.modes.is_empty() {
            return Err(invalid("--modes", "at least one mode is required"));
        }
        if self.shots == 0 {
            return Err(invalid("--shots", "at least one shot per cell is required"));
        }
        if self.rounds == Some(0) {
            return Err(invalid("--rounds", "at least one round is required"));
        }
        if !(self.leak_factor >= 0.0) {
            return Err(invalid("--leak-factor", format!("{} must be non-negative", self.leak_factor)));
        }
        if let Some(&p) = self.p_values.iter().find(|&&p| p * self.leak_factor > 1.0) {
            return Err(invalid(
                "--leak-factor",
                format!("leak probability {} at p = {p} exceeds 1", p * self.leak_factor),
            ));
        }
        if !(0.0..=1.0).contains(&self.decay_prob) {
            return Err(invalid("--decay", format!("{} is outside [0, 1]", self.decay_prob)));
        }
        if self.workers == Some(0) {
            return Err(invalid("--workers", "at least one worker is required"));
        }
        Ok(())
    }

    pub fn rounds_for(&self, distance: usize) -> usize {
        self.rounds.unwrap_or_else(|| CodeParams::default_rounds(distance))
    }

    pub fn worker_count(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn code(&self, distance: usize, mode: Mode) -> CodeParams {
        CodeParams::new(distance, self.rounds_for(distance), mode)
    }

    pub fn noise(&self, p: f64, mode: Mode) -> NoiseParams {
        NoiseParams {
            p,
            leak_factor: self.leak_factor,
            decay_prob: self.decay_prob,
            leakage_enabled: mode.has_leakage(),
            teleport_enabled: mode.teleports(),
        }
    }

    /// Sweep cells in output order: distance, then p, then mode.
    pub fn cells(&self) -> Vec<(usize, f64, Mode)> {
        let mut out = Vec::with_capacity(self.distances.len() * self.p_values.len() * self.modes.len());
        for &d in &self.distances {
            for &p in &self.p_values {
                for &mode in &self.modes {
                    out.push((d, p, mode));
                }
            }
        }
        out
    }
}
