//! Monte Carlo execution: noisy simulation of a schedule, detection-event
//! extraction, decoding, and aggregation into per-round logical error rates.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{build_experiment, CodeParams, MeasureRole, Schedule};
use crate::dgraph::{Dot, FaultTable, MatchingGraph};
use crate::error::{Error, Result};
use crate::matcher::Decoder;
use crate::noise::{gate_noise_unchecked, init_unchecked, measure_unchecked, NoiseParams, RngStream};
use crate::pauli::{GateKind, PauliLeak, SystemFrame};

/// Shots handed to a worker at a time. Results do not depend on it.
pub const CHUNK_SHOTS: u64 = 1024;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Detection events of one history, sorted by `(site, round)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct DetectionEventSet {
    pub dots: Vec<Dot>,
}

impl DetectionEventSet {
    pub fn len(&self) -> usize {
        self.dots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dots.is_empty()
    }
}

/// Compares every stabilizer value with the previous round's value of the
/// same site (the first round compares with 0). When the schedule ends in a
/// transversal readout, the parity of neighbouring data columns forms one more
/// round of comparisons.
pub fn extract_detection_events(record: &[bool], schedule: &Schedule) -> Result<DetectionEventSet> {
    if record.len() != schedule.measurement_count() {
        return Err(Error::IncompleteRecord {
            expected: schedule.measurement_count(),
            got: record.len(),
        });
    }
    let mut dots = Vec::new();
    for site in 0..schedule.sites() {
        let mut prev = false;
        for round in 0..schedule.rounds {
            let bit = record[schedule.stabilizer_slot(site, round)];
            if bit != prev {
                dots.push(Dot::new(site, round));
            }
            prev = bit;
        }
        if let (Some(a), Some(b)) = (schedule.terminal_slot(site), schedule.terminal_slot(site + 1)) {
            if (record[a] ^ record[b]) != prev {
                dots.push(Dot::new(site, schedule.rounds));
            }
        }
    }
    Ok(DetectionEventSet { dots })
}

/// Runs the schedule under noise. `hook(step, frame)` is called before every
/// step and once more after the last one, for tests that inject errors.
/// Returns the number of leakage injections.
pub fn simulate<R, H>(
    schedule: &Schedule,
    params: &NoiseParams,
    rng: &mut R,
    frame: &mut SystemFrame,
    mut hook: H,
) -> Result<u32>
where
    R: Rng + ?Sized,
    H: FnMut(usize, &mut SystemFrame),
{
    if frame.states.len() != schedule.qubit_count {
        return Err(Error::InvalidCode(format!(
            "frame has {} qubits, schedule needs {}",
            frame.states.len(),
            schedule.qubit_count
        )));
    }
    frame.record.clear();
    frame.record.reserve(schedule.measurement_count());
    let mut leaks = 0;
    for (t, step) in schedule.steps.iter().enumerate() {
        hook(t, frame);
        for gate in step {
            match gate.kind {
                GateKind::Init => init_unchecked(&mut frame.states, gate.qubit(), params, rng),
                GateKind::Measure => {
                    let bit = measure_unchecked(&mut frame.states, gate.qubit(), params, rng);
                    let slot = frame.record.len();
                    frame.record.push(bit);
                    if let MeasureRole::Gadget { target } = schedule.measurements[slot].role {
                        if bit {
                            frame.apply(target, PauliLeak::Z);
                        }
                    }
                }
                _ => leaks += gate_noise_unchecked(&mut frame.states, gate, params, rng),
            }
        }
    }
    hook(schedule.steps.len(), frame);
    Ok(leaks)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct ShotResult {
    pub failed: bool,
    pub detection_event_count: usize,
    pub leak_events: u32,
}

/// Decodes a finished history and decides logical failure: the decoder's
/// logical parity must match the true flip of the observable (terminal
/// readout of data column 0).
pub fn decode_history(schedule: &Schedule, decoder: &Decoder, record: &[bool]) -> Result<(bool, usize)> {
    let events = extract_detection_events(record, schedule)?;
    let decoded = decoder.decode(&events)?;
    if cfg!(debug_assertions) {
        let corrections = decoder.corrections(&decoded)?;
        debug_assert!(
            decoder.residual_events(&events, &corrections).is_empty(),
            "corrections leave residual detection events"
        );
    }
    let actual = schedule.terminal_slot(0).map(|s| record[s]).unwrap_or(false);
    Ok((actual != decoded.logical_flip, events.len()))
}

pub fn run_shot<R: Rng + ?Sized>(
    schedule: &Schedule,
    decoder: &Decoder,
    params: &NoiseParams,
    rng: &mut R,
) -> Result<ShotResult> {
    let mut frame = SystemFrame::new(schedule.qubit_count);
    let leak_events = simulate(schedule, params, rng, &mut frame, |_, _| {})?;
    let (failed, detection_event_count) = decode_history(schedule, decoder, &frame.record)?;
    Ok(ShotResult { failed, detection_event_count, leak_events })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogicalErrorEstimate {
    pub p_shot: f64,
    pub p_round: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub shots: u64,
    pub failures: u64,
    pub rounds: usize,
}

/// Wilson score interval for a binomial proportion at 95% confidence.
pub fn wilson_interval(failures: u64, shots: u64) -> (f64, f64) {
    let n = shots as f64;
    let k = failures as f64;
    let z2 = Z95 * Z95;
    let denom = n + z2;
    let center = (k + z2 / 2.0) / denom;
    let half = Z95 / denom * (k * (n - k) / n + z2 / 4.0).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Converts a failure probability over `rounds` rounds to a per-round rate.
pub fn per_round(p_shot: f64, rounds: usize) -> f64 {
    if p_shot >= 1.0 {
        return 1.0;
    }
    if p_shot <= 0.0 {
        return 0.0;
    }
    // 1 - (1 - p)^(1/T), written to stay accurate for tiny p.
    -(((1.0 - p_shot).ln() / rounds as f64).exp_m1())
}

impl LogicalErrorEstimate {
    pub fn from_counts(failures: u64, shots: u64, rounds: usize) -> Self {
        let p_shot = failures as f64 / shots as f64;
        let (lo, hi) = wilson_interval(failures, shots);
        let p_round = per_round(p_shot, rounds);
        LogicalErrorEstimate {
            p_shot,
            p_round,
            ci_low: per_round(lo, rounds).min(p_round),
            ci_high: per_round(hi, rounds).max(p_round),
            shots,
            failures,
            rounds,
        }
    }

    /// True when the two 95% intervals do not overlap.
    pub fn separated_from(&self, other: &Self) -> bool {
        self.ci_high < other.ci_low || other.ci_high < self.ci_low
    }
}

/// A built schedule with its decoder, ready to sample shots.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub code: CodeParams,
    pub noise: NoiseParams,
    pub schedule: Schedule,
    pub decoder: Decoder,
}

impl Experiment {
    /// Builds schedule and decoder. The noise's leakage and teleport flags
    /// are taken from the code mode.
    pub fn new(code: CodeParams, noise: NoiseParams) -> Result<Self> {
        let schedule = build_experiment(&code)?;
        let table = FaultTable::build(&schedule)?;
        Self::with_table(code, noise, schedule, &table)
    }

    /// Same as [`Experiment::new`] but reuses a fault table computed for the
    /// same schedule (only the probabilities depend on `p`).
    pub fn with_table(code: CodeParams, noise: NoiseParams, schedule: Schedule, table: &FaultTable) -> Result<Self> {
        let noise = NoiseParams {
            leakage_enabled: code.mode.has_leakage(),
            teleport_enabled: code.mode.teleports(),
            ..noise
        };
        noise.validate()?;
        let graph = MatchingGraph::from_table(table, noise.p)?;
        let decoder = Decoder::new(graph);
        Ok(Experiment { code, noise, schedule, decoder })
    }

    pub fn run_shot(&self, master_seed: u64, shot: u64) -> Result<ShotResult> {
        let mut rng = RngStream::new(master_seed, shot);
        run_shot(&self.schedule, &self.decoder, &self.noise, &mut rng)
    }

    fn count_failures(&self, master_seed: u64, range: std::ops::Range<u64>) -> Result<u64> {
        let mut frame = SystemFrame::new(self.schedule.qubit_count);
        let mut failures = 0;
        for shot in range {
            let mut rng = RngStream::new(master_seed, shot);
            frame.states.fill(PauliLeak::I);
            simulate(&self.schedule, &self.noise, &mut rng, &mut frame, |_, _| {})?;
            failures += decode_history(&self.schedule, &self.decoder, &frame.record)?.0 as u64;
        }
        Ok(failures)
    }

    /// Failures over shots `first..first + shots`, split into fixed chunks on
    /// a pool of `workers` threads. Shot `i` always uses stream `i`, so the
    /// count does not depend on `workers`.
    pub fn failures_in(&self, master_seed: u64, first: u64, shots: u64, workers: usize) -> Result<u64> {
        let end = first + shots;
        let chunks: Vec<std::ops::Range<u64>> = (first..end)
            .step_by(CHUNK_SHOTS as usize)
            .map(|s| s..(s + CHUNK_SHOTS).min(end))
            .collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::InvalidCode(format!("cannot start worker pool: {e}")))?;
        pool.install(|| {
            chunks
                .into_par_iter()
                .map(|r| self.count_failures(master_seed, r))
                .try_reduce(|| 0, |a, b| Ok(a + b))
        })
    }

    pub fn estimate(&self, shots: u64, master_seed: u64, workers: usize) -> Result<LogicalErrorEstimate> {
        if shots == 0 {
            return Err(Error::InvalidCode("at least one shot is required".into()));
        }
        let failures = self.failures_in(master_seed, 0, shots, workers)?;
        Ok(LogicalErrorEstimate::from_counts(failures, shots, self.code.rounds))
    }
}

/// Builds the experiment for `(code, noise)` and estimates its logical error
/// rate over `shots` shots.
pub fn estimate(
    code: CodeParams,
    noise: NoiseParams,
    shots: u64,
    master_seed: u64,
    workers: usize,
) -> Result<LogicalErrorEstimate> {
    Experiment::new(code, noise)?.estimate(shots, master_seed, workers)
}
