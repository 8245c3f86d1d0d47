//! End-to-end acceptance checks. Each criterion prints one PASS or FAIL
//! line; the process exits non-zero if any criterion fails.

use std::collections::HashMap;
use std::io::Write;
use std::process::{Command, ExitCode};

use leakrep::dgraph::FaultTable;
use leakrep::engine::{extract_detection_events, simulate};
use leakrep::matcher::{min_weight_match, EventGraph};
use leakrep::noise::{apply_gate_noise, noisy_measure, sample_pauli, sample_pauli_pair};
use leakrep::{
    build_experiment, CodeParams, Dot, Experiment, Gate, GateKind, LogicalErrorEstimate, MatchingGraph, Mode,
    NoiseParams, PauliLeak, RngStream, Schedule, SystemFrame,
};
use leakrep_cli::{fit_slope, Row};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2013;
const ROUNDS: usize = 10;
const SHOTS: u64 = 1_000_000;
const SWEEP: [f64; 4] = [1e-3, 2e-3, 4e-3, 8e-3];
const SHOT_CAP: u64 = 100_000_000;

fn say(line: &str) {
    // Written straight to stderr so the line survives output capture.
    let _ = writeln!(std::io::stderr(), "{line}");
}

struct Cell {
    exp: Experiment,
    shots: u64,
    failures: u64,
}

/// Monte Carlo cells shared between criteria, keyed by (mode, d, p).
struct Cells {
    workers: usize,
    tables: HashMap<(Mode, usize), (Schedule, FaultTable)>,
    cells: HashMap<(Mode, usize, u64), Cell>,
}

impl Cells {
    fn new() -> Self {
        Cells {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            tables: HashMap::new(),
            cells: HashMap::new(),
        }
    }

    /// Estimate over at least `shots` shots, topping up an existing cell.
    fn at_least(&mut self, mode: Mode, d: usize, p: f64, shots: u64) -> LogicalErrorEstimate {
        let key = (mode, d, p.to_bits());
        if !self.cells.contains_key(&key) {
            let code = CodeParams::new(d, ROUNDS, mode);
            let (schedule, table) = self.tables.entry((mode, d)).or_insert_with(|| {
                let s = build_experiment(&code).unwrap();
                let t = FaultTable::build(&s).unwrap();
                (s, t)
            });
            let exp = Experiment::with_table(code, NoiseParams::with_leakage(p), schedule.clone(), table).unwrap();
            self.cells.insert(key, Cell { exp, shots: 0, failures: 0 });
        }
        let workers = self.workers;
        let cell = self.cells.get_mut(&key).unwrap();
        if cell.shots < shots {
            let extra = shots - cell.shots;
            cell.failures += cell.exp.failures_in(SEED, cell.shots, extra, workers).unwrap();
            cell.shots = shots;
            let est = LogicalErrorEstimate::from_counts(cell.failures, cell.shots, ROUNDS);
            say(&format!(
                "  cell {mode} d={d} p={p}: {}/{} p_round={:.4e} [{:.4e}, {:.4e}]",
                cell.failures, cell.shots, est.p_round, est.ci_low, est.ci_high
            ));
        }
        LogicalErrorEstimate::from_counts(cell.failures, cell.shots, ROUNDS)
    }

    fn get(&mut self, mode: Mode, d: usize, p: f64) -> LogicalErrorEstimate {
        self.at_least(mode, d, p, SHOTS)
    }

    fn slope(&mut self, mode: Mode, d: usize) -> Result<f64, String> {
        let rows: Vec<Row> = SWEEP.iter().map(|&p| Row::new(mode, d, p, SEED, &self.get(mode, d, p))).collect();
        fit_slope(&rows, SWEEP.len()).map(|f| f.exponent).map_err(|e| e.to_string())
    }
}

struct Verdict {
    ok: bool,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Verdict { ok: true, notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, note: String) {
        self.ok &= ok;
        self.notes.push(format!("{}{note}", if ok { "" } else { "!! " }));
    }

    fn slope_in(&mut self, label: &str, slope: Result<f64, String>, lo: f64, hi: f64) {
        match slope {
            Ok(s) => self.check((lo..=hi).contains(&s), format!("{label} slope {s:.3} in [{lo}, {hi}]")),
            Err(e) => self.check(false, format!("{label} slope unavailable: {e}")),
        }
    }
}

fn report(n: u32, title: &str, v: &Verdict) -> bool {
    say(&format!(
        "criterion {n} ({title}): {} | {}",
        if v.ok { "PASS" } else { "FAIL" },
        v.notes.join("; ")
    ));
    v.ok
}

fn no_leakage_exponents(cells: &mut Cells) -> Verdict {
    let mut v = Verdict::new();
    let s3 = cells.slope(Mode::Plain, 3);
    v.slope_in("d=3", s3, 1.7, 2.3);
    let s5 = cells.slope(Mode::Plain, 5);
    v.slope_in("d=5", s5, 2.5, 3.5);
    v
}

fn leakage_degradation(cells: &mut Cells) -> Verdict {
    let mut v = Verdict::new();
    let s3 = cells.slope(Mode::Leakage, 3);
    v.slope_in("leakage d=3", s3, 0.8, 1.3);
    for d in [3, 5, 7] {
        for p in SWEEP {
            let leak = cells.get(Mode::Leakage, d, p);
            let plain = cells.get(Mode::Plain, d, p);
            let above = leak.p_round > plain.p_round;
            let separated = leak.ci_low > plain.ci_high;
            let ok = above && (p < 4e-3 || separated);
            if !ok || p >= 4e-3 {
                v.check(
                    ok,
                    format!(
                        "d={d} p={p}: leakage {:.3e} vs plain {:.3e}{}",
                        leak.p_round,
                        plain.p_round,
                        if p >= 4e-3 { if separated { " (separated)" } else { " (overlapping)" } } else { "" }
                    ),
                );
            }
        }
    }
    if v.ok {
        v.notes.push("leakage above plain at all 12 cells".into());
    }
    v
}

fn threshold_under_leakage(cells: &mut Cells) -> Verdict {
    let p = 1e-3;
    let mut shots = SHOTS;
    loop {
        let est: Vec<_> = [3, 5, 7].iter().map(|&d| cells.at_least(Mode::Leakage, d, p, shots)).collect();
        let resolved = est.windows(2).all(|w| w[1].p_round < w[0].p_round && w[1].ci_high < w[0].ci_low);
        if resolved || shots >= SHOT_CAP {
            let mut v = Verdict::new();
            for (pair, w) in [(3, 5), (5, 7)].iter().zip(est.windows(2)) {
                v.check(
                    w[1].p_round < w[0].p_round && w[1].ci_high < w[0].ci_low,
                    format!(
                        "d={} {:.3e} [{:.2e}, {:.2e}] > d={} {:.3e} [{:.2e}, {:.2e}]",
                        pair.0, w[0].p_round, w[0].ci_low, w[0].ci_high, pair.1, w[1].p_round, w[1].ci_low, w[1].ci_high
                    ),
                );
            }
            v.notes.push(format!("{shots} shots per cell"));
            return v;
        }
        shots = (shots * 4).min(SHOT_CAP);
    }
}

fn teleport_restoration(cells: &mut Cells) -> Verdict {
    let mut v = Verdict::new();
    let s3 = cells.slope(Mode::Teleport, 3);
    v.slope_in("teleport d=3", s3, 0.8, 1.3);
    let s5 = cells.slope(Mode::Teleport, 5);
    v.slope_in("teleport d=5", s5, 1.6, 2.5);
    for d in [5, 7] {
        let tel = cells.get(Mode::Teleport, d, 1e-3);
        let leak = cells.get(Mode::Leakage, d, 1e-3);
        v.check(
            tel.p_round < leak.p_round,
            format!("d={d} p=0.001: teleport {:.3e} < leakage {:.3e}", tel.p_round, leak.p_round),
        );
    }
    v
}

/// Exhaustive optimum over subsets: every event is paired or sent to the
/// boundary.
fn brute_force_matching(eg: &EventGraph) -> f64 {
    let n = eg.len();
    let full = (1usize << n) - 1;
    let mut best = vec![f64::INFINITY; 1 << n];
    best[0] = 0.0;
    for mask in 1..=full {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut b = eg.boundary_distances[i] + best[rest];
        let mut others = rest;
        while others != 0 {
            let j = others.trailing_zeros() as usize;
            others &= others - 1;
            b = b.min(eg.pair_distance(i, j) + best[rest & !(1 << j)]);
        }
        best[mask] = b;
    }
    best[full]
}

fn matcher_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut exact, mut close, mut wrong) = (0, 0, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=12);
        let mut pair = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let w = 1.0 - rng.random::<f64>();
                pair[i * n + j] = w;
                pair[j * n + i] = w;
            }
        }
        let bd: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
        let eg = EventGraph::from_distances(pair, bd);
        let m = min_weight_match(&eg).unwrap();
        let mut used = vec![0; n];
        for &(i, j) in &m.pairs {
            used[i] += 1;
            used[j] += 1;
        }
        for &i in &m.boundary_matches {
            used[i] += 1;
        }
        let opt = brute_force_matching(&eg);
        let diff = (m.total_weight - opt).abs();
        worst = worst.max(diff);
        if used.iter().any(|&u| u != 1) || diff > 1e-9 {
            wrong += 1;
        } else if diff == 0.0 {
            exact += 1;
        } else {
            close += 1;
        }
    }
    let mut v = Verdict::new();
    v.check(
        wrong == 0,
        format!("1000 instances: {exact} bit-equal, {close} within 1e-9, {wrong} wrong (max diff {worst:.1e})"),
    );
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Location {
    TopSingle,
    SimultaneousPair,
    BottomSingle,
    DiagonalPair,
    SequentialPair,
}

fn classify(dots: &[Dot], sites: usize) -> Option<Location> {
    let coords: Vec<(usize, usize)> = dots
        .iter()
        .map(|d| match *d {
            Dot::Site { site, round } => (site as usize, round as usize),
            Dot::Boundary => unreachable!("events never include the boundary"),
        })
        .collect();
    match coords.as_slice() {
        [(0, _)] => Some(Location::TopSingle),
        [(s, _)] if *s == sites - 1 => Some(Location::BottomSingle),
        [a, b] => {
            let (a, b) = if a <= b { (*a, *b) } else { (*b, *a) };
            if a.1 == b.1 && b.0 == a.0 + 1 {
                Some(Location::SimultaneousPair)
            } else if b.0 == a.0 + 1 && b.1 == a.1 + 1 {
                Some(Location::DiagonalPair)
            } else if a.0 == b.0 && b.1 == a.1 + 1 {
                Some(Location::SequentialPair)
            } else {
                None
            }
        }
        _ => None,
    }
}

fn graph_oracle() -> Verdict {
    let mut v = Verdict::new();
    let schedule = build_experiment(&CodeParams::new(3, 4, Mode::Plain)).unwrap();
    let p = 1e-4;
    let table = FaultTable::build(&schedule).unwrap();
    let graph = MatchingGraph::from_table(&table, p).unwrap();

    // Taxonomy of every enumerated fault class.
    let mut seen: HashMap<Location, usize> = HashMap::new();
    let mut outside = 0;
    for (_, effect) in &table.entries {
        if effect.events.dots.is_empty() {
            continue;
        }
        match classify(&effect.events.dots, graph.sites) {
            Some(loc) => *seen.entry(loc).or_default() += 1,
            None => outside += 1,
        }
    }
    v.check(
        outside == 0 && seen.len() == 5,
        format!("{} classes: {} of 5 locations present, {outside} outside the taxonomy", table.entries.len(), seen.len()),
    );

    // Independent single-fault sampling through the noiseless simulator.
    let gates: Vec<(usize, Gate)> = schedule
        .steps
        .iter()
        .enumerate()
        .flat_map(|(t, step)| step.iter().map(move |g| (t, *g)))
        .collect();
    let silent = NoiseParams::depolarizing(0.0);
    let samples: u64 = 1_000_000;
    let mut rng = RngStream::new(SEED, 6);
    let mut frame = SystemFrame::new(schedule.qubit_count);
    let mut counts: HashMap<(Dot, Dot), u64> = HashMap::new();
    let mut unexplained = 0;
    for _ in 0..samples {
        let (t, gate) = gates[rng.random_range(0..gates.len())];
        let (paulis, at) = match gate.kind {
            GateKind::Cz => {
                let (a, b) = sample_pauli_pair(&mut rng);
                ([a, b], t + 1)
            }
            GateKind::Measure => ([sample_pauli(&mut rng), PauliLeak::I], t),
            _ => ([sample_pauli(&mut rng), PauliLeak::I], t + 1),
        };
        frame.states.fill(PauliLeak::I);
        simulate(&schedule, &silent, &mut rng, &mut frame, |step, f| {
            if step == at {
                for (&q, &e) in gate.operands().iter().zip(&paulis) {
                    f.apply(q, e);
                }
            }
        })
        .unwrap();
        let mut dots = extract_detection_events(&frame.record, &schedule).unwrap().dots;
        dots.sort();
        let key = match dots.as_slice() {
            [] => continue,
            [a] => (*a, Dot::Boundary),
            [a, b] => (*a, *b),
            _ => {
                unexplained += 1;
                continue;
            }
        };
        if graph.line(key.0, key.1).is_none() {
            unexplained += 1;
        }
        *counts.entry(key).or_default() += 1;
    }
    v.check(unexplained == 0, format!("{unexplained} sampled faults with no matching line"));

    let scale = gates.len() as f64 * p;
    let mut outliers = Vec::new();
    let mut worst: f64 = 0.0;
    for line in &graph.lines {
        let q = line.probability / scale;
        let expected = q * samples as f64;
        let sigma = (expected * (1.0 - q)).sqrt();
        let observed = *counts.get(&(line.a, line.b)).unwrap_or(&0) as f64;
        let z = (observed - expected) / sigma;
        worst = worst.max(z.abs());
        if z.abs() > 3.0 {
            outliers.push(format!("{}-{} z={z:.2}", line.a, line.b));
        }
    }
    v.check(
        outliers.is_empty(),
        format!(
            "{} lines vs {samples} single-fault samples: max |z| {worst:.2}{}",
            graph.lines.len(),
            if outliers.is_empty() { String::new() } else { format!(" ({})", outliers.join(", ")) }
        ),
    );
    v
}

fn within_3_sigma(v: &mut Verdict, label: &str, hits: u64, trials: u64, prob: f64) {
    let expected = prob * trials as f64;
    let sigma = (trials as f64 * prob * (1.0 - prob)).sqrt();
    let z = (hits as f64 - expected) / sigma;
    v.check(z.abs() <= 3.0, format!("{label} {:.4} (z={z:.2})", hits as f64 / trials as f64));
}

fn noise_statistics() -> Verdict {
    let mut v = Verdict::new();
    let mut rng = RngStream::new(SEED, 7);

    let trials = 1_000_000u64;
    let measure = Gate::single(GateKind::Measure, 0, 0).unwrap();
    let noisy = NoiseParams::with_leakage(0.01);
    let mut frame = SystemFrame::new(1);
    let mut ones = 0;
    for _ in 0..trials {
        frame.set(0, PauliLeak::L);
        ones += noisy_measure(&mut frame, &measure, &noisy, &mut rng).unwrap() as u64;
        assert!(frame.get(0).is_leaked());
    }
    frame.record.clear();
    within_3_sigma(&mut v, "leaked readout P(1)", ones, trials, 0.5);

    let trials = 400_000u64;
    let cz = Gate::cz(0, 1, 0).unwrap();
    let frozen = NoiseParams { decay_prob: 0.0, ..NoiseParams::with_leakage(0.0) };
    let mut frame = SystemFrame::new(2);
    let mut tally = [0u64; 4];
    for _ in 0..trials {
        frame.set(0, PauliLeak::L);
        frame.set(1, PauliLeak::I);
        apply_gate_noise(&mut frame, &cz, &frozen, &mut rng).unwrap();
        assert!(frame.get(0).is_leaked() && !frame.get(1).is_leaked());
        let idx = PauliLeak::PAULIS.iter().position(|&q| q == frame.get(1)).unwrap();
        tally[idx] += 1;
    }
    for (q, &hits) in PauliLeak::PAULIS.iter().zip(&tally) {
        within_3_sigma(&mut v, &format!("scramble P({q})"), hits, trials, 0.25);
    }

    let trials = 200_000u64;
    let decay = 0.01;
    let idle = Gate::single(GateKind::Identity, 0, 0).unwrap();
    let params = NoiseParams { decay_prob: decay, ..NoiseParams::with_leakage(0.0) };
    let mut frame = SystemFrame::new(1);
    let mut total = 0u64;
    for _ in 0..trials {
        frame.set(0, PauliLeak::L);
        let mut gates = 0u64;
        while frame.get(0).is_leaked() {
            apply_gate_noise(&mut frame, &idle, &params, &mut rng).unwrap();
            gates += 1;
        }
        total += gates;
    }
    let mean = total as f64 / trials as f64;
    let sigma = ((1.0 - decay).sqrt() / decay) / (trials as f64).sqrt();
    let z = (mean - 1.0 / decay) / sigma;
    v.check(z.abs() <= 3.0, format!("decay lifetime mean {mean:.3} gates vs {} (z={z:.2})", 1.0 / decay));
    v
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for workers in [1, 4, 8] {
        let path = dir.path().join(format!("w{workers}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_leakrep"))
            .args([
                "--distances", "3,5", "--p-values", "0.002,0.008", "--modes", "plain,leakage,teleport",
                "--shots", "30000", "--rounds", "10", "--seed", "77", "--workers",
            ])
            .arg(workers.to_string())
            .arg("--out")
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(&path).unwrap());
    }
    let mut v = Verdict::new();
    v.check(
        outputs.windows(2).all(|w| w[0] == w[1]),
        format!("12-cell CSV ({} bytes) identical across 1, 4 and 8 workers", outputs[0].len()),
    );
    v
}

fn main() -> ExitCode {
    let mut cells = Cells::new();
    let mut all = true;
    all &= report(5, "matcher exactness", &matcher_exactness());
    all &= report(7, "noise-channel statistics", &noise_statistics());
    all &= report(6, "graph oracle", &graph_oracle());
    all &= report(8, "determinism", &determinism());
    all &= report(1, "no-leakage exponents", &no_leakage_exponents(&mut cells));
    all &= report(2, "leakage degradation", &leakage_degradation(&mut cells));
    all &= report(3, "threshold under leakage", &threshold_under_leakage(&mut cells));
    all &= report(4, "teleport restoration", &teleport_restoration(&mut cells));
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
