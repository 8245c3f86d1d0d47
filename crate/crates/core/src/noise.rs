//! Stochastic gate noise: depolarizing faults, leakage injection and decay,
//! scrambling of CZ partners of leaked qubits, and random readout of leaked
//! qubits.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{conjugate_unchecked, Gate, GateKind, PauliLeak, SystemFrame};

pub const DEFAULT_LEAK_FACTOR: f64 = 0.1;
pub const DEFAULT_DECAY_PROB: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Depolarizing probability of every gate.
    pub p: f64,
    /// Leakage probability per Hadamard/CZ operand is `leak_factor * p`.
    pub leak_factor: f64,
    /// Probability that a leaked qubit decays during an Identity, Hadamard or CZ.
    pub decay_prob: f64,
    pub leakage_enabled: bool,
    pub teleport_enabled: bool,
}

impl NoiseParams {
    pub fn depolarizing(p: f64) -> Self {
        NoiseParams {
            p,
            leak_factor: DEFAULT_LEAK_FACTOR,
            decay_prob: DEFAULT_DECAY_PROB,
            leakage_enabled: false,
            teleport_enabled: false,
        }
    }

    pub fn with_leakage(p: f64) -> Self {
        NoiseParams {
            leakage_enabled: true,
            ..Self::depolarizing(p)
        }
    }

    pub fn leak_prob(&self) -> f64 {
        if self.leakage_enabled {
            self.leak_factor * self.p
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !in_unit(self.p) {
            return Err(Error::InvalidNoise(format!("p = {} is outside [0, 1]", self.p)));
        }
        if !(self.leak_factor >= 0.0 && in_unit(self.leak_factor * self.p)) {
            return Err(Error::InvalidNoise(format!(
                "leak probability leak_factor * p = {} is outside [0, 1]",
                self.leak_factor * self.p
            )));
        }
        if !in_unit(self.decay_prob) {
            return Err(Error::InvalidNoise(format!(
                "decay probability {} is outside [0, 1]",
                self.decay_prob
            )));
        }
        Ok(())
    }
}

/// Random stream for one shot. The same `(master_seed, stream_id)` always
/// replays the same sequence; distinct stream ids select disjoint ChaCha
/// streams.
#[derive(Clone, Debug)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        RngStream(rng)
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// Uniform over `X`, `Y`, `Z`.
#[inline]
pub fn sample_pauli<R: Rng + ?Sized>(rng: &mut R) -> PauliLeak {
    PauliLeak::from_index(rng.random_range(1..4))
}

/// Uniform over the 15 non-identity two-qubit Paulis.
#[inline]
pub fn sample_pauli_pair<R: Rng + ?Sized>(rng: &mut R) -> (PauliLeak, PauliLeak) {
    let k: u32 = rng.random_range(1..16);
    (PauliLeak::from_index(k), PauliLeak::from_index(k >> 2))
}

/// Uniform over `I`, `X`, `Y`, `Z`.
#[inline]
pub fn sample_scramble<R: Rng + ?Sized>(rng: &mut R) -> PauliLeak {
    PauliLeak::from_index(rng.random_range(0..4))
}

#[inline]
fn chance<R: Rng + ?Sized>(rng: &mut R, prob: f64) -> bool {
    prob > 0.0 && rng.random::<f64>() < prob
}

/// Noisy Identity, Hadamard or CZ. Returns the number of operands that
/// became leaked during this gate.
///
/// Sub-steps, in order: ideal conjugation, scrambling of an unleaked CZ
/// partner of a leaked qubit, depolarizing fault, leakage injection (Hadamard
/// and CZ only), decay of leaked operands.
pub fn apply_gate_noise<R: Rng + ?Sized>(
    frame: &mut SystemFrame,
    gate: &Gate,
    params: &NoiseParams,
    rng: &mut R,
) -> Result<u32> {
    frame.check_operands(gate)?;
    if !matches!(gate.kind, GateKind::Identity | GateKind::Hadamard | GateKind::Cz) {
        return Err(Error::InvalidGate(format!(
            "{} is not a unitary gate",
            gate.kind.name()
        )));
    }
    Ok(gate_noise_unchecked(&mut frame.states, gate, params, rng))
}

#[inline]
pub(crate) fn gate_noise_unchecked<R: Rng + ?Sized>(
    states: &mut [PauliLeak],
    gate: &Gate,
    params: &NoiseParams,
    rng: &mut R,
) -> u32 {
    // Only called with unitary gates, so this cannot fail.
    let _ = conjugate_unchecked(states, gate);

    let ops = gate.operands();
    if gate.kind == GateKind::Cz {
        let (a, b) = (ops[0] as usize, ops[1] as usize);
        match (states[a].is_leaked(), states[b].is_leaked()) {
            (true, false) => states[b] = sample_scramble(rng),
            (false, true) => states[a] = sample_scramble(rng),
            _ => {}
        }
    }

    if chance(rng, params.p) {
        if gate.kind == GateKind::Cz {
            let (pa, pb) = sample_pauli_pair(rng);
            let (a, b) = (ops[0] as usize, ops[1] as usize);
            states[a] = states[a].compose(pa);
            states[b] = states[b].compose(pb);
        } else {
            let q = ops[0] as usize;
            states[q] = states[q].compose(sample_pauli(rng));
        }
    }

    let mut leaks = 0;
    let leak_prob = params.leak_prob();
    if gate.kind != GateKind::Identity && leak_prob > 0.0 {
        for &q in ops {
            let s = &mut states[q as usize];
            if !s.is_leaked() && chance(rng, leak_prob) {
                *s = PauliLeak::L;
                leaks += 1;
            }
        }
    }

    for &q in ops {
        let s = &mut states[q as usize];
        if s.is_leaked() && chance(rng, params.decay_prob) {
            *s = sample_scramble(rng);
        }
    }
    leaks
}

/// Fresh qubit in the ideal state (leakage cleared), followed by a
/// depolarizing fault with probability `p`.
pub fn noisy_init<R: Rng + ?Sized>(
    frame: &mut SystemFrame,
    gate: &Gate,
    params: &NoiseParams,
    rng: &mut R,
) -> Result<()> {
    frame.check_operands(gate)?;
    if gate.kind != GateKind::Init {
        return Err(Error::InvalidGate(format!("expected INIT, got {}", gate.kind.name())));
    }
    init_unchecked(&mut frame.states, gate.qubit(), params, rng);
    Ok(())
}

#[inline]
pub(crate) fn init_unchecked<R: Rng + ?Sized>(
    states: &mut [PauliLeak],
    qubit: u32,
    params: &NoiseParams,
    rng: &mut R,
) {
    states[qubit as usize] = if chance(rng, params.p) {
        sample_pauli(rng)
    } else {
        PauliLeak::I
    };
}

/// Z-basis readout. A depolarizing fault (probability `p`) lands first; a
/// leaked qubit then reports a uniformly random bit and stays leaked,
/// otherwise the bit is the qubit's X component. The bit is appended to the
/// record and returned.
pub fn noisy_measure<R: Rng + ?Sized>(
    frame: &mut SystemFrame,
    gate: &Gate,
    params: &NoiseParams,
    rng: &mut R,
) -> Result<bool> {
    frame.check_operands(gate)?;
    if gate.kind != GateKind::Measure {
        return Err(Error::InvalidGate(format!(
            "expected MEASURE, got {}",
            gate.kind.name()
        )));
    }
    let bit = measure_unchecked(&mut frame.states, gate.qubit(), params, rng);
    frame.record.push(bit);
    Ok(bit)
}

#[inline]
pub(crate) fn measure_unchecked<R: Rng + ?Sized>(
    states: &mut [PauliLeak],
    qubit: u32,
    params: &NoiseParams,
    rng: &mut R,
) -> bool {
    let s = &mut states[qubit as usize];
    if chance(rng, params.p) {
        *s = s.compose(sample_pauli(rng));
    }
    if s.is_leaked() {
        rng.random::<bool>()
    } else {
        s.x()
    }
}
