//! Decoder matching graph, generated by enumerating every single Pauli fault
//! of the depolarizing model and propagating it through the noiseless
//! schedule.
//!
//! Dots are the space-time locations `(site, round)` where a detection event
//! can occur, plus one boundary vertex. A fault class producing events at two
//! dots contributes its probability to the line between them; a class with a
//! single event contributes to that dot's boundary line. Leakage is ignored
//! here: the decoder is built as if it never happened.

use std::collections::BTreeMap;
use std::fmt;

use crate::circuits::{MeasureRole, Schedule};
use crate::engine::{extract_detection_events, DetectionEventSet};
use crate::error::{Error, Result};
use crate::noise::NoiseParams;
use crate::pauli::{conjugate_unchecked, GateKind, PauliLeak};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dot {
    Site { site: u32, round: u32 },
    Boundary,
}

impl Dot {
    pub fn new(site: usize, round: usize) -> Self {
        Dot::Site { site: site as u32, round: round as u32 }
    }

    pub fn is_boundary(self) -> bool {
        self == Dot::Boundary
    }
}

impl fmt::Display for Dot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dot::Site { site, round } => write!(f, "D({site},{round})"),
            Dot::Boundary => f.write_str("B"),
        }
    }
}

/// A single Pauli fault at one gate. For Init and unitary gates the Pauli
/// lands after the gate; for Measure it lands just before the readout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaultClass {
    pub step: u32,
    pub gate: u32,
    pub paulis: [PauliLeak; 2],
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaultEffect {
    pub events: DetectionEventSet,
    /// Whether the fault flips the terminal readout of data column 0, the
    /// logical observable.
    pub flips_logical: bool,
}

/// What the decoder should undo when it uses a line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LineCorrection {
    pub flips_logical: bool,
    /// Stabilizer measurement `(site, round)` to flip, for time-like lines.
    pub measurement: Option<(u32, u32)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub a: Dot,
    pub b: Dot,
    pub probability: f64,
    pub weight: f64,
    pub correction: LineCorrection,
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {:.9e} {:.9} L={}",
            self.a, self.b, self.probability, self.weight, self.correction.flips_logical as u8
        )?;
        match self.correction.measurement {
            Some((s, r)) => write!(f, " M=({s},{r})"),
            None => write!(f, " M=-"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchingGraph {
    pub sites: usize,
    /// Number of detection rounds, including the terminal comparison.
    pub dot_rounds: usize,
    /// Sorted by endpoints.
    pub lines: Vec<Line>,
    /// Fault classes whose events had to be split over several lines.
    pub decomposed_classes: usize,
    /// Fault classes that flip the logical observable without any event.
    pub undetectable_logical: usize,
}

/// Probability-free enumeration result: every fault class with unit total
/// gate probability, and what it does.
#[derive(Clone, Debug)]
pub struct FaultTable {
    pub sites: usize,
    pub dot_rounds: usize,
    pub entries: Vec<(FaultClass, FaultEffect)>,
}

/// XOR-merge: probability that exactly one of two independent events occurs.
#[inline]
pub fn merge_probability(p1: f64, p2: f64) -> f64 {
    p1 * (1.0 - p2) + p2 * (1.0 - p1)
}

/// Every single Pauli fault of the depolarizing model: three per one-qubit
/// gate (probability `p/3` each) and fifteen per CZ (`p/15` each).
pub fn enumerate_fault_classes(schedule: &Schedule, params: &NoiseParams) -> Result<Vec<FaultClass>> {
    if !(params.p > 0.0) {
        return Err(Error::Graph(format!(
            "line weights are undefined for p = {}",
            params.p
        )));
    }
    params.validate()?;
    let mut out = Vec::new();
    for (t, step) in schedule.steps.iter().enumerate() {
        for (gi, gate) in step.iter().enumerate() {
            if gate.kind == GateKind::Cz {
                for k in 1..16u32 {
                    out.push(FaultClass {
                        step: t as u32,
                        gate: gi as u32,
                        paulis: [PauliLeak::from_index(k), PauliLeak::from_index(k >> 2)],
                        probability: params.p / 15.0,
                    });
                }
            } else {
                for k in 1..4u32 {
                    out.push(FaultClass {
                        step: t as u32,
                        gate: gi as u32,
                        paulis: [PauliLeak::from_index(k), PauliLeak::I],
                        probability: params.p / 3.0,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Runs the rest of the schedule without noise, with `fault` injected, and
/// returns the resulting detection events and logical flip.
pub fn propagate_fault(schedule: &Schedule, fault: &FaultClass) -> Result<FaultEffect> {
    let t0 = fault.step as usize;
    let gate = schedule
        .steps
        .get(t0)
        .and_then(|s| s.get(fault.gate as usize))
        .ok_or_else(|| Error::Graph(format!("no gate {} at step {}", fault.gate, fault.step)))?;
    if gate.operands().len() == 1 && !fault.paulis[1].is_identity() {
        return Err(Error::Graph(format!("two-qubit fault on one-qubit gate {gate}")));
    }

    let mut states = vec![PauliLeak::I; schedule.qubit_count];
    let mut record = vec![false; schedule.measurement_count()];
    let mut slot = schedule.first_slot_at(t0);
    for t in t0..schedule.steps.len() {
        for (gi, g) in schedule.steps[t].iter().enumerate() {
            let faulty = t == t0 && gi == fault.gate as usize;
            match g.kind {
                GateKind::Init => states[g.qubit() as usize] = PauliLeak::I,
                GateKind::Measure => {
                    if faulty {
                        let q = g.qubit() as usize;
                        states[q] = states[q].compose(fault.paulis[0]);
                    }
                }
                _ => conjugate_unchecked(&mut states, g)?,
            }
            if faulty && g.kind != GateKind::Measure {
                for (&q, &p) in g.operands().iter().zip(&fault.paulis) {
                    states[q as usize] = states[q as usize].compose(p);
                }
            }
            if g.kind == GateKind::Measure {
                let bit = states[g.qubit() as usize].x();
                record[slot] = bit;
                if let MeasureRole::Gadget { target } = schedule.measurements[slot].role {
                    if bit {
                        states[target as usize] = states[target as usize].compose(PauliLeak::Z);
                    }
                }
                slot += 1;
            }
        }
    }
    let events = extract_detection_events(&record, schedule)?;
    let flips_logical = schedule.terminal_slot(0).map(|s| record[s]).unwrap_or(false);
    Ok(FaultEffect { events, flips_logical })
}

impl FaultTable {
    /// Enumerates and propagates every fault class. The result does not
    /// depend on `p`; class probabilities are stored for `p = 1`.
    pub fn build(schedule: &Schedule) -> Result<Self> {
        if schedule.measurement_count() == 0 {
            return Err(Error::Graph("schedule has no measurements".into()));
        }
        let classes = enumerate_fault_classes(schedule, &NoiseParams::depolarizing(1.0))?;
        let mut entries = Vec::with_capacity(classes.len());
        for class in classes {
            let effect = propagate_fault(schedule, &class)?;
            entries.push((class, effect));
        }
        Ok(FaultTable {
            sites: schedule.sites(),
            dot_rounds: schedule.rounds + schedule.has_terminal_readout() as usize,
            entries,
        })
    }
}

#[derive(Default)]
struct Accum {
    probability: f64,
    by_correction: BTreeMap<LineCorrection, f64>,
}

impl Accum {
    fn add(&mut self, probability: f64, correction: LineCorrection) {
        self.probability = merge_probability(self.probability, probability);
        *self.by_correction.entry(correction).or_default() += probability;
    }
}

fn line_key(a: Dot, b: Dot) -> (Dot, Dot) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn implied_correction(a: Dot, b: Dot, flips_logical: bool) -> LineCorrection {
    let measurement = match (a, b) {
        (Dot::Site { site: s1, round: r1 }, Dot::Site { site: s2, round: r2 })
            if s1 == s2 && r1.abs_diff(r2) == 1 =>
        {
            Some((s1, r1.min(r2)))
        }
        _ => None,
    };
    LineCorrection { flips_logical, measurement }
}

/// Splits `events` into blocks of one (boundary line) or two dots that are
/// existing lines, using as few blocks as possible and, among those, the
/// most probable. Blocks whose logical flips add up to `flips_logical` are
/// preferred.
fn decompose(
    events: &[Dot],
    flips_logical: bool,
    lines: &BTreeMap<(Dot, Dot), Accum>,
) -> Option<Vec<(Dot, Dot)>> {
    fn logical_of(acc: &Accum) -> bool {
        acc.by_correction
            .iter()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map(|(c, _)| c.flips_logical)
            .unwrap_or(false)
    }

    fn search(
        rest: &mut Vec<Dot>,
        chosen: &mut Vec<(Dot, Dot)>,
        lines: &BTreeMap<(Dot, Dot), Accum>,
        best: &mut Option<(bool, usize, f64, Vec<(Dot, Dot)>)>,
        target: bool,
    ) {
        let Some(&first) = rest.first() else {
            let parity = chosen.iter().fold(false, |acc, k| acc ^ logical_of(&lines[k]));
            let log_prob: f64 = chosen.iter().map(|k| lines[k].probability.ln()).sum();
            let candidate = (parity == target, chosen.len(), log_prob);
            let better = match best {
                None => true,
                Some((ok, n, lp, _)) => {
                    (candidate.0, std::cmp::Reverse(candidate.1)) > (*ok, std::cmp::Reverse(*n))
                        || ((candidate.0, candidate.1) == (*ok, *n) && candidate.2 > *lp)
                }
            };
            if better {
                *best = Some((candidate.0, candidate.1, candidate.2, chosen.clone()));
            }
            return;
        };
        let boundary_key = line_key(first, Dot::Boundary);
        if lines.contains_key(&boundary_key) {
            let e = rest.remove(0);
            chosen.push(boundary_key);
            search(rest, chosen, lines, best, target);
            chosen.pop();
            rest.insert(0, e);
        }
        for i in 1..rest.len() {
            let key = line_key(first, rest[i]);
            if lines.contains_key(&key) {
                let other = rest.remove(i);
                let e = rest.remove(0);
                chosen.push(key);
                search(rest, chosen, lines, best, target);
                chosen.pop();
                rest.insert(0, e);
                rest.insert(i, other);
            }
        }
    }

    let mut rest = events.to_vec();
    let mut best = None;
    search(&mut rest, &mut Vec::new(), lines, &mut best, flips_logical);
    best.map(|(_, _, _, blocks)| blocks)
}

impl MatchingGraph {
    /// Assigns probabilities for depolarizing rate `p` to a fault table.
    pub fn from_table(table: &FaultTable, p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Graph(format!("line weights are undefined for p = {p}")));
        }
        let mut lines: BTreeMap<(Dot, Dot), Accum> = BTreeMap::new();
        let mut large = Vec::new();
        let mut undetectable_logical = 0;
        for (class, effect) in &table.entries {
            let prob = class.probability * p;
            let ev = &effect.events.dots;
            match ev.len() {
                0 => undetectable_logical += effect.flips_logical as usize,
                1 | 2 => {
                    let (a, b) = if ev.len() == 1 { (ev[0], Dot::Boundary) } else { (ev[0], ev[1]) };
                    lines
                        .entry(line_key(a, b))
                        .or_default()
                        .add(prob, implied_correction(a, b, effect.flips_logical));
                }
                _ => large.push((prob, effect)),
            }
        }
        let decomposed_classes = large.len();
        for (prob, effect) in large {
            let blocks = decompose(&effect.events.dots, effect.flips_logical, &lines).ok_or_else(|| {
                Error::Graph(format!(
                    "fault with events {:?} cannot be split into existing lines",
                    effect.events.dots
                ))
            })?;
            for key in blocks {
                let acc = lines.get_mut(&key).expect("decomposition uses existing lines");
                acc.probability = merge_probability(acc.probability, prob);
            }
        }

        let lines = lines
            .into_iter()
            .map(|((a, b), acc)| {
                let correction = acc
                    .by_correction
                    .iter()
                    .fold(None::<(&LineCorrection, f64)>, |best, (c, &w)| match best {
                        Some((_, bw)) if bw >= w => best,
                        _ => Some((c, w)),
                    })
                    .map(|(c, _)| *c)
                    .unwrap_or_default();
                Line {
                    a,
                    b,
                    probability: acc.probability,
                    weight: -acc.probability.ln(),
                    correction,
                }
            })
            .collect();
        Ok(MatchingGraph {
            sites: table.sites,
            dot_rounds: table.dot_rounds,
            lines,
            decomposed_classes,
            undetectable_logical,
        })
    }

    pub fn dot_count(&self) -> usize {
        self.sites * self.dot_rounds
    }

    /// Site-major index of a real dot, so index order is `(site, round)` order.
    pub fn dot_index(&self, dot: Dot) -> Option<usize> {
        match dot {
            Dot::Site { site, round } if (site as usize) < self.sites && (round as usize) < self.dot_rounds => {
                Some(site as usize * self.dot_rounds + round as usize)
            }
            Dot::Site { .. } => None,
            Dot::Boundary => Some(self.dot_count()),
        }
    }

    pub fn dot_at(&self, index: usize) -> Dot {
        if index == self.dot_count() {
            Dot::Boundary
        } else {
            Dot::new(index / self.dot_rounds, index % self.dot_rounds)
        }
    }

    pub fn line(&self, a: Dot, b: Dot) -> Option<&Line> {
        let key = line_key(a, b);
        self.lines
            .binary_search_by(|l| (l.a, l.b).cmp(&key))
            .ok()
            .map(|i| &self.lines[i])
    }

    /// One line per graph line: endpoints, probability, weight, correction.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            out.push_str(&l.to_string());
            out.push('\n');
        }
        out
    }
}

/// Enumerates, propagates and merges every fault class for `params.p`.
pub fn build_graph(schedule: &Schedule, params: &NoiseParams) -> Result<MatchingGraph> {
    enumerate_fault_classes(schedule, params)?;
    MatchingGraph::from_table(&FaultTable::build(schedule)?, params.p)
}
