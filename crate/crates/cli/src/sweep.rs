use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use leakrep::{build_experiment, Experiment, FaultTable, LogicalErrorEstimate, Mode, Schedule};
use serde::{Deserialize, Serialize};

use crate::config::{Format, SweepConfig};
use crate::CliError;

/// One output record. Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub mode: Mode,
    pub d: usize,
    pub p: f64,
    #[serde(rename = "T")]
    pub rounds: usize,
    pub shots: u64,
    pub failures: u64,
    pub p_round: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "mode,d,p,T,shots,failures,p_round,ci_low,ci_high,seed";

impl Row {
    pub fn new(mode: Mode, d: usize, p: f64, seed: u64, est: &LogicalErrorEstimate) -> Self {
        Row {
            mode,
            d,
            p,
            rounds: est.rounds,
            shots: est.shots,
            failures: est.failures,
            p_round: est.p_round,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            seed,
        }
    }
}

/// Streams rows to a writer, flushing after each one so an interrupted
/// sweep keeps every finished cell.
pub struct RowWriter<W: Write> {
    format: Format,
    out: W,
    rows: usize,
}

impl<W: Write> RowWriter<W> {
    pub fn new(format: Format, mut out: W) -> io::Result<Self> {
        match format {
            Format::Csv => writeln!(out, "{CSV_HEADER}")?,
            Format::Json => write!(out, "[")?,
        }
        out.flush()?;
        Ok(RowWriter { format, out, rows: 0 })
    }

    pub fn write(&mut self, row: &Row) -> Result<(), CliError> {
        match self.format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut self.out);
                w.serialize(row)?;
                w.flush()?;
            }
            Format::Json => {
                if self.rows > 0 {
                    write!(self.out, ",")?;
                }
                write!(self.out, "\n  ")?;
                serde_json::to_writer(&mut self.out, row)?;
            }
        }
        self.rows += 1;
        self.out.flush()?;
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<W> {
        if self.format == Format::Json {
            if self.rows > 0 {
                writeln!(self.out)?;
            }
            writeln!(self.out, "]")?;
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Opens the configured output, or stdout.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(path) => {
            let file = File::create(path).map_err(|source| CliError::Output { path: path.to_path_buf(), source })?;
            Ok(Box::new(BufWriter::new(file)))
        }
    }
}

/// Schedules and fault tables depend on (d, T, mode) but not on p, so each
/// is built once per sweep.
#[derive(Default)]
struct TableCache {
    entries: HashMap<(usize, usize, Mode), (Schedule, FaultTable)>,
}

impl TableCache {
    fn experiment(&mut self, config: &SweepConfig, d: usize, p: f64, mode: Mode) -> Result<Experiment, CliError> {
        let code = config.code(d, mode);
        let key = (d, code.rounds, mode);
        if !self.entries.contains_key(&key) {
            let schedule = build_experiment(&code)?;
            let table = FaultTable::build(&schedule)?;
            self.entries.insert(key, (schedule, table));
        }
        let (schedule, table) = &self.entries[&key];
        Ok(Experiment::with_table(code, config.noise(p, mode), schedule.clone(), table)?)
    }
}

/// Runs every cell in order, handing each finished row to `on_row`.
pub fn run_sweep_with<F>(config: &SweepConfig, mut on_row: F) -> Result<Vec<Row>, CliError>
where
    F: FnMut(&Row) -> Result<(), CliError>,
{
    config.validate()?;
    let workers = config.worker_count();
    let mut cache = TableCache::default();
    let mut rows = Vec::new();
    for (d, p, mode) in config.cells() {
        let exp = cache.experiment(config, d, p, mode)?;
        let est = exp.estimate(config.shots, config.master_seed, workers)?;
        let row = Row::new(mode, d, p, config.master_seed, &est);
        on_row(&row)?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn run_sweep(config: &SweepConfig) -> Result<Vec<Row>, CliError> {
    run_sweep_with(config, |_| Ok(()))
}

/// Runs the sweep and writes rows to the configured output.
pub fn run_sweep_to_output(config: &SweepConfig) -> Result<Vec<Row>, CliError> {
    config.validate()?;
    let out = open_output(config.output.as_deref())?;
    let mut writer = RowWriter::new(config.format, out)?;
    let rows = run_sweep_with(config, |row| writer.write(row))?;
    writer.finish()?;
    Ok(rows)
}

pub fn schedule_dump(config: &SweepConfig) -> Result<String, CliError> {
    config.validate()?;
    let mut out = String::new();
    for &d in &config.distances {
        for &mode in &config.modes {
            let code = config.code(d, mode);
            let schedule = build_experiment(&code)?;
            out.push_str(&format!("# schedule mode={mode} d={d} T={}\n", code.rounds));
            out.push_str(&schedule.dump());
        }
    }
    Ok(out)
}

pub fn graph_dump(config: &SweepConfig) -> Result<String, CliError> {
    config.validate()?;
    let mut cache = TableCache::default();
    let mut out = String::new();
    for (d, p, mode) in config.cells() {
        let exp = cache.experiment(config, d, p, mode)?;
        out.push_str(&format!("# graph mode={mode} d={d} T={} p={p}\n", exp.code.rounds));
        out.push_str(&exp.decoder.graph.dump());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(p: f64) -> Row {
        Row::new(Mode::Plain, 3, p, 9, &LogicalErrorEstimate::from_counts(3, 100, 10))
    }

    #[test]
    fn csv_header_matches_fields() {
        let mut w = RowWriter::new(Format::Csv, Vec::new()).unwrap();
        w.write(&row(0.001)).unwrap();
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let fields: Vec<_> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 10);
        assert_eq!(&fields[..4], &["plain", "3", "0.001", "10"]);
        assert_eq!(fields[9], "9");

        let parsed: Vec<Row> = csv::Reader::from_reader(text.as_bytes())
            .deserialize()
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(parsed, vec![row(0.001)]);
    }

    #[test]
    fn json_is_an_array_of_rows() {
        for n in [0, 1, 3] {
            let mut w = RowWriter::new(Format::Json, Vec::new()).unwrap();
            for i in 0..n {
                w.write(&row(0.001 * (i + 1) as f64)).unwrap();
            }
            let text = String::from_utf8(w.finish().unwrap()).unwrap();
            let parsed: Vec<Row> = serde_json::from_str(&text).unwrap();
            assert_eq!(parsed.len(), n);
            if n > 0 {
                let v: serde_json::Value = serde_json::from_str(&text).unwrap();
                assert!(v[0].get("T").is_some());
            }
        }
    }
}
