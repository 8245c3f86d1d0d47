//! Gate schedules for repetition-code error detection, with optional
//! teleportation of every data qubit onto a fresh neighbour after each round.
//!
//! Qubits sit on a line. Data and measurement qubits alternate; the
//! measurement qubit of site `k` checks the `ZZ` parity of data columns `k`
//! (above) and `k + 1` (below). In teleport mode one spare qubit is appended
//! and the data shifts down one position after even rounds and back up after
//! odd rounds, swapping roles with the measurement qubits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Gate, GateKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Depolarizing noise only.
    Plain,
    /// Depolarizing noise plus leakage.
    Leakage,
    /// Leakage, with every data qubit teleported after each round.
    Teleport,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Plain, Mode::Leakage, Mode::Teleport];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Plain => "plain",
            Mode::Leakage => "leakage",
            Mode::Teleport => "teleport",
        }
    }

    pub fn has_leakage(self) -> bool {
        self != Mode::Plain
    }

    pub fn teleports(self) -> bool {
        self == Mode::Teleport
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain" => Ok(Mode::Plain),
            "leakage" => Ok(Mode::Leakage),
            "teleport" => Ok(Mode::Teleport),
            other => Err(Error::InvalidCode(format!(
                "unknown mode '{other}' (expected plain, leakage or teleport)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeParams {
    pub distance: usize,
    pub rounds: usize,
    pub mode: Mode,
}

impl CodeParams {
    pub fn new(distance: usize, rounds: usize, mode: Mode) -> Self {
        CodeParams { distance, rounds, mode }
    }

    /// Rounds used when none are requested: `max(10, 3d)`.
    pub fn default_rounds(distance: usize) -> usize {
        (3 * distance).max(10)
    }

    pub fn validate(&self) -> Result<()> {
        check_distance(self.distance)?;
        if self.rounds == 0 {
            return Err(Error::InvalidCode("at least one round is required".into()));
        }
        Ok(())
    }

    pub fn qubit_count(&self) -> usize {
        match self.mode {
            Mode::Teleport => 2 * self.distance,
            _ => 2 * self.distance - 1,
        }
    }
}

fn check_distance(d: usize) -> Result<()> {
    if d < 3 || d % 2 == 0 {
        return Err(Error::InvalidCode(format!(
            "distance must be odd and at least 3, got {d}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeasureRole {
    /// Parity check between data columns `site` and `site + 1`.
    Stabilizer { site: u32, round: u32 },
    /// Source of a teleport gadget; the bit's byproduct lands on `target`.
    Gadget { target: u32 },
    /// Final transversal readout of a data column.
    Terminal { column: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Measurement {
    pub step: u32,
    pub qubit: u32,
    pub role: MeasureRole,
}

/// Which physical qubits hold data columns and measurement sites in a round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleMap {
    pub data: Vec<u32>,
    pub measure: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub distance: usize,
    pub rounds: usize,
    pub mode: Mode,
    pub qubit_count: usize,
    pub steps: Vec<Vec<Gate>>,
    /// First step of each round, followed by the first step of the terminal
    /// readout (when present).
    pub round_boundaries: Vec<usize>,
    pub role_map: Vec<RoleMap>,
    /// Physical positions of the data columns at the terminal readout.
    pub terminal_data: Vec<u32>,
    /// Every measurement, in execution order. Index = record slot.
    pub measurements: Vec<Measurement>,
    slot_start: Vec<usize>,
    stabilizer_slots: Vec<u32>,
    terminal_slots: Vec<u32>,
}

enum Op {
    One(GateKind, u32),
    Cz(u32, u32),
    Measure(u32, MeasureRole),
}

struct Builder {
    qubit_count: usize,
    steps: Vec<Vec<Gate>>,
    measurements: Vec<Measurement>,
}

impl Builder {
    fn new(qubit_count: usize) -> Self {
        Builder { qubit_count, steps: vec![], measurements: vec![] }
    }

    /// Adds one time step; qubits not named in `ops` idle under Identity.
    fn step(&mut self, ops: Vec<Op>) -> Result<()> {
        let t = self.steps.len() as u32;
        let mut busy = vec![false; self.qubit_count];
        let mut gates = Vec::with_capacity(self.qubit_count);
        let mut claim = |q: u32| -> Result<()> {
            let slot = busy.get_mut(q as usize).ok_or(Error::QubitOutOfRange {
                index: q,
                qubit_count: self.qubit_count,
            })?;
            if *slot {
                return Err(Error::InvalidGate(format!("qubit {q} used twice in step {t}")));
            }
            *slot = true;
            Ok(())
        };
        for op in ops {
            match op {
                Op::One(kind, q) => {
                    claim(q)?;
                    gates.push(Gate::single(kind, q, t)?);
                }
                Op::Cz(a, b) => {
                    claim(a)?;
                    claim(b)?;
                    gates.push(Gate::cz(a, b, t)?);
                }
                Op::Measure(q, role) => {
                    claim(q)?;
                    gates.push(Gate::single(GateKind::Measure, q, t)?);
                    self.measurements.push(Measurement { step: t, qubit: q, role });
                }
            }
        }
        for (q, used) in busy.iter().enumerate() {
            if !used {
                gates.push(Gate::single(GateKind::Identity, q as u32, t)?);
            }
        }
        self.steps.push(gates);
        Ok(())
    }

    fn standard_round(&mut self, roles: &RoleMap, round: u32, init_all: bool) -> Result<()> {
        let init: Vec<Op> = if init_all {
            (0..self.qubit_count as u32).map(|q| Op::One(GateKind::Init, q)).collect()
        } else {
            roles.measure.iter().map(|&m| Op::One(GateKind::Init, m)).collect()
        };
        self.step(init)?;
        self.step(roles.measure.iter().map(|&m| Op::One(GateKind::Hadamard, m)).collect())?;
        self.step(
            roles.measure.iter().zip(&roles.data).map(|(&m, &d)| Op::Cz(m, d)).collect(),
        )?;
        self.step(
            roles.measure.iter().zip(&roles.data[1..]).map(|(&m, &d)| Op::Cz(m, d)).collect(),
        )?;
        self.step(roles.measure.iter().map(|&m| Op::One(GateKind::Hadamard, m)).collect())?;
        self.step(
            roles
                .measure
                .iter()
                .enumerate()
                .map(|(site, &m)| Op::Measure(m, MeasureRole::Stabilizer { site: site as u32, round }))
                .collect(),
        )
    }

    /// Parallel one-bit teleports `source -> target`.
    fn teleport_layer(&mut self, pairs: &[(u32, u32)]) -> Result<()> {
        for &(s, t) in pairs {
            if s == t {
                return Err(Error::InvalidGate(format!(
                    "teleport source and target are both qubit {s}"
                )));
            }
        }
        self.step(pairs.iter().map(|&(_, t)| Op::One(GateKind::Init, t)).collect())?;
        self.step(pairs.iter().map(|&(_, t)| Op::One(GateKind::Hadamard, t)).collect())?;
        self.step(pairs.iter().map(|&(s, t)| Op::Cz(s, t)).collect())?;
        self.step(
            pairs
                .iter()
                .flat_map(|&(s, t)| [Op::One(GateKind::Hadamard, s), Op::One(GateKind::Hadamard, t)])
                .collect(),
        )?;
        self.step(
            pairs
                .iter()
                .map(|&(s, t)| Op::Measure(s, MeasureRole::Gadget { target: t }))
                .collect(),
        )
    }

    fn terminal_readout(&mut self, data: &[u32]) -> Result<()> {
        self.step(
            data.iter()
                .enumerate()
                .map(|(c, &q)| Op::Measure(q, MeasureRole::Terminal { column: c as u32 }))
                .collect(),
        )
    }

    fn finish(
        self,
        distance: usize,
        rounds: usize,
        mode: Mode,
        round_boundaries: Vec<usize>,
        role_map: Vec<RoleMap>,
        terminal_data: Vec<u32>,
    ) -> Schedule {
        let mut slot_start = Vec::with_capacity(self.steps.len() + 1);
        let mut next = 0;
        for t in 0..self.steps.len() {
            slot_start.push(next);
            next += self.measurements[next..]
                .iter()
                .take_while(|m| m.step as usize == t)
                .count();
        }
        slot_start.push(next);

        let sites = distance - 1;
        let mut stabilizer_slots = vec![u32::MAX; sites * rounds];
        let mut terminal_slots = vec![u32::MAX; if terminal_data.is_empty() { 0 } else { distance }];
        for (slot, m) in self.measurements.iter().enumerate() {
            match m.role {
                MeasureRole::Stabilizer { site, round } => {
                    stabilizer_slots[round as usize * sites + site as usize] = slot as u32
                }
                MeasureRole::Terminal { column } => terminal_slots[column as usize] = slot as u32,
                MeasureRole::Gadget { .. } => {}
            }
        }
        Schedule {
            distance,
            rounds,
            mode,
            qubit_count: self.qubit_count,
            steps: self.steps,
            round_boundaries,
            role_map,
            terminal_data,
            measurements: self.measurements,
            slot_start,
            stabilizer_slots,
            terminal_slots,
        }
    }
}

fn round_roles(distance: usize, offset: u32) -> RoleMap {
    let d = distance as u32;
    RoleMap {
        data: (0..d).map(|c| 2 * c + offset).collect(),
        measure: (0..d - 1).map(|k| 2 * k + 1 + offset).collect(),
    }
}

/// One standard error-detection round for distance `d`: data on even qubits,
/// measurement qubits on odd ones, six steps, no terminal readout.
pub fn build_standard_round(d: usize) -> Result<Schedule> {
    check_distance(d)?;
    let roles = round_roles(d, 0);
    let mut b = Builder::new(2 * d - 1);
    b.standard_round(&roles, 0, false)?;
    Ok(b.finish(d, 1, Mode::Plain, vec![0], vec![roles], vec![]))
}

/// A single teleport gadget moving `source` onto `target` within a register of
/// `qubit_count` qubits. The two qubits must differ.
pub fn build_teleport_gadget(source: u32, target: u32, qubit_count: usize) -> Result<Schedule> {
    let mut b = Builder::new(qubit_count);
    b.teleport_layer(&[(source, target)])?;
    let roles = RoleMap { data: vec![source], measure: vec![] };
    let mut s = b.finish(1, 0, Mode::Teleport, vec![], vec![roles], vec![target]);
    s.stabilizer_slots.clear();
    Ok(s)
}

/// Full experiment: `rounds` error-detection rounds (data initialized in the
/// all-zeros codeword during the first) followed by transversal readout of
/// every data qubit.
pub fn build_experiment(params: &CodeParams) -> Result<Schedule> {
    params.validate()?;
    let d = params.distance;
    let mut b = Builder::new(params.qubit_count());
    let mut boundaries = Vec::with_capacity(params.rounds + 1);
    let mut role_map = Vec::with_capacity(params.rounds);
    let mut offset = 0u32;
    for round in 0..params.rounds {
        let roles = round_roles(d, offset);
        boundaries.push(b.steps.len());
        b.standard_round(&roles, round as u32, round == 0)?;
        if params.mode.teleports() {
            let pairs: Vec<(u32, u32)> = roles
                .data
                .iter()
                .map(|&q| if offset == 0 { (q, q + 1) } else { (q, q - 1) })
                .collect();
            b.teleport_layer(&pairs)?;
            offset ^= 1;
        }
        role_map.push(roles);
    }
    let terminal = round_roles(d, offset).data;
    boundaries.push(b.steps.len());
    b.terminal_readout(&terminal)?;
    Ok(b.finish(d, params.rounds, params.mode, boundaries, role_map, terminal))
}

impl Schedule {
    pub fn sites(&self) -> usize {
        self.distance.saturating_sub(1)
    }

    pub fn gate_count(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }

    pub fn measurement_count(&self) -> usize {
        self.measurements.len()
    }

    /// First record slot written at or after `step`.
    pub fn first_slot_at(&self, step: usize) -> usize {
        self.slot_start[step]
    }

    /// Record slot of the stabilizer measurement at `(site, round)`.
    pub fn stabilizer_slot(&self, site: usize, round: usize) -> usize {
        self.stabilizer_slots[round * self.sites() + site] as usize
    }

    /// Record slot of the terminal readout of data column `column`, if the
    /// schedule has one.
    pub fn terminal_slot(&self, column: usize) -> Option<usize> {
        self.terminal_slots.get(column).map(|&s| s as usize)
    }

    pub fn has_terminal_readout(&self) -> bool {
        !self.terminal_slots.is_empty()
    }

    /// Checks the structural invariants: operands in range and disjoint
    /// within every step.
    pub fn validate(&self) -> Result<()> {
        for (t, step) in self.steps.iter().enumerate() {
            let mut busy = vec![false; self.qubit_count];
            for g in step {
                if g.step as usize != t {
                    return Err(Error::InvalidGate(format!("gate {g} filed under step {t}")));
                }
                for &q in g.operands() {
                    let slot = busy.get_mut(q as usize).ok_or(Error::QubitOutOfRange {
                        index: q,
                        qubit_count: self.qubit_count,
                    })?;
                    if *slot {
                        return Err(Error::InvalidGate(format!("qubit {q} used twice in step {t}")));
                    }
                    *slot = true;
                }
            }
        }
        Ok(())
    }

    /// One line per gate: `step KIND operands...`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for g in self.steps.iter().flatten() {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }
}
