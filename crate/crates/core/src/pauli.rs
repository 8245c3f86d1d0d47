//! Single-qubit error states with leakage, and their propagation through the
//! Clifford gates used by the repetition-code circuits.
//!
//! Every qubit carries one of `I`, `X`, `Y`, `Z` or `L` relative to the ideal
//! (error-free) circuit. Phases are discarded, so Pauli composition is a XOR of
//! the `x` and `z` bits. A leaked qubit absorbs anything composed onto it.

use std::fmt;

use crate::error::{Error, Result};

/// Error state of one qubit: a phase-free Pauli, or leaked.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct PauliLeak(u8);

const X_BIT: u8 = 0b001;
const Z_BIT: u8 = 0b010;
const L_BIT: u8 = 0b100;

impl PauliLeak {
    pub const I: PauliLeak = PauliLeak(0);
    pub const X: PauliLeak = PauliLeak(X_BIT);
    pub const Z: PauliLeak = PauliLeak(Z_BIT);
    pub const Y: PauliLeak = PauliLeak(X_BIT | Z_BIT);
    pub const L: PauliLeak = PauliLeak(L_BIT);

    /// The four computational error states, in `I, X, Z, Y` bit order.
    pub const PAULIS: [PauliLeak; 4] = [Self::I, Self::X, Self::Z, Self::Y];

    pub fn from_bits(x: bool, z: bool) -> Self {
        PauliLeak(x as u8 | (z as u8) << 1)
    }

    /// Builds a Pauli from the low two bits of `index` (bit 0 = x, bit 1 = z).
    #[inline]
    pub fn from_index(index: u32) -> Self {
        PauliLeak((index & 0b11) as u8)
    }

    #[inline]
    pub fn x(self) -> bool {
        self.0 & X_BIT != 0
    }

    #[inline]
    pub fn z(self) -> bool {
        self.0 & Z_BIT != 0
    }

    #[inline]
    pub fn is_leaked(self) -> bool {
        self.0 & L_BIT != 0
    }

    #[inline]
    pub fn is_identity(self) -> bool {
        self.0 == 0
    }

    /// Composes `other` onto `self`. Leakage on either side wins.
    #[inline]
    pub fn compose(self, other: PauliLeak) -> PauliLeak {
        if (self.0 | other.0) & L_BIT != 0 {
            PauliLeak::L
        } else {
            PauliLeak(self.0 ^ other.0)
        }
    }

    pub fn label(self) -> char {
        match self.0 {
            0 => 'I',
            X_BIT => 'X',
            Z_BIT => 'Z',
            3 => 'Y',
            _ => 'L',
        }
    }

    #[inline]
    fn hadamard(self) -> PauliLeak {
        if self.is_leaked() {
            self
        } else {
            PauliLeak::from_bits(self.z(), self.x())
        }
    }
}

impl fmt::Debug for PauliLeak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl fmt::Display for PauliLeak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    Init,
    Measure,
    Identity,
    Hadamard,
    Cz,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cz => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Init => "INIT",
            GateKind::Measure => "MEASURE",
            GateKind::Identity => "I",
            GateKind::Hadamard => "H",
            GateKind::Cz => "CZ",
        }
    }
}

/// One gate at a given time step. Single-qubit gates leave `qubits[1]` unused.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    qubits: [u32; 2],
    pub step: u32,
}

impl Gate {
    pub fn single(kind: GateKind, qubit: u32, step: u32) -> Result<Self> {
        if kind.arity() != 1 {
            return Err(Error::InvalidGate(format!("{} takes two operands", kind.name())));
        }
        Ok(Gate { kind, qubits: [qubit, qubit], step })
    }

    pub fn cz(a: u32, b: u32, step: u32) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidGate(format!("CZ operands must differ (both {a})")));
        }
        Ok(Gate { kind: GateKind::Cz, qubits: [a, b], step })
    }

    #[inline]
    pub fn operands(&self) -> &[u32] {
        &self.qubits[..self.kind.arity()]
    }

    #[inline]
    pub fn qubit(&self) -> u32 {
        self.qubits[0]
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.step, self.kind.name())?;
        for q in self.operands() {
            write!(f, " {q}")?;
        }
        Ok(())
    }
}

/// Error state of every qubit plus the classical measurement record, both
/// relative to the ideal circuit. Record entries are indexed by measurement
/// slot, in execution order.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SystemFrame {
    pub states: Vec<PauliLeak>,
    pub record: Vec<bool>,
}

impl SystemFrame {
    pub fn new(qubit_count: usize) -> Self {
        SystemFrame {
            states: vec![PauliLeak::I; qubit_count],
            record: Vec::new(),
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.states.len()
    }

    /// Resets to the all-identity state without freeing storage.
    pub fn clear(&mut self) {
        self.states.fill(PauliLeak::I);
        self.record.clear();
    }

    #[inline]
    pub fn get(&self, qubit: u32) -> PauliLeak {
        self.states[qubit as usize]
    }

    #[inline]
    pub fn set(&mut self, qubit: u32, state: PauliLeak) {
        self.states[qubit as usize] = state;
    }

    #[inline]
    pub fn apply(&mut self, qubit: u32, error: PauliLeak) {
        let s = &mut self.states[qubit as usize];
        *s = s.compose(error);
    }

    pub fn leaked_count(&self) -> usize {
        self.states.iter().filter(|s| s.is_leaked()).count()
    }

    pub(crate) fn check_operands(&self, gate: &Gate) -> Result<()> {
        for &q in gate.operands() {
            if q as usize >= self.states.len() {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    qubit_count: self.states.len(),
                });
            }
        }
        Ok(())
    }
}

/// Ideal Clifford conjugation of the frame by `gate`.
///
/// Leaked qubits stay leaked and never hand their flag to a CZ partner.
/// Init and Measure are rejected here: they are not unitaries and are handled
/// by the noise model and the engine.
pub fn conjugate(frame: &mut SystemFrame, gate: &Gate) -> Result<()> {
    frame.check_operands(gate)?;
    conjugate_unchecked(&mut frame.states, gate)
}

#[inline]
pub(crate) fn conjugate_unchecked(states: &mut [PauliLeak], gate: &Gate) -> Result<()> {
    match gate.kind {
        GateKind::Identity => {}
        GateKind::Hadamard => {
            let q = gate.qubits[0] as usize;
            states[q] = states[q].hadamard();
        }
        GateKind::Cz => {
            let (a, b) = (gate.qubits[0] as usize, gate.qubits[1] as usize);
            let (sa, sb) = (states[a], states[b]);
            // X on one side picks up Z on the other; a leaked side has no X to give.
            if !sb.is_leaked() && sa.x() && !sa.is_leaked() {
                states[b] = sb.compose(PauliLeak::Z);
            }
            if !sa.is_leaked() && sb.x() && !sb.is_leaked() {
                states[a] = sa.compose(PauliLeak::Z);
            }
        }
        GateKind::Init | GateKind::Measure => {
            return Err(Error::InvalidGate(format!(
                "{} is not a Clifford unitary",
                gate.kind.name()
            )))
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame_of(states: &[PauliLeak]) -> SystemFrame {
        SystemFrame {
            states: states.to_vec(),
            record: vec![],
        }
    }

    fn any_state() -> impl Strategy<Value = PauliLeak> {
        prop_oneof![
            Just(PauliLeak::I),
            Just(PauliLeak::X),
            Just(PauliLeak::Y),
            Just(PauliLeak::Z),
            Just(PauliLeak::L)
        ]
    }

    fn any_pauli() -> impl Strategy<Value = PauliLeak> {
        (0u32..4).prop_map(PauliLeak::from_index)
    }

    #[test]
    fn compose_examples() {
        assert_eq!(PauliLeak::X.compose(PauliLeak::Z), PauliLeak::Y);
        assert_eq!(PauliLeak::L.compose(PauliLeak::X), PauliLeak::L);
        assert_eq!(PauliLeak::X.compose(PauliLeak::L), PauliLeak::L);
        assert_eq!(PauliLeak::I.compose(PauliLeak::I), PauliLeak::I);
        assert_eq!(PauliLeak::Y.compose(PauliLeak::Y), PauliLeak::I);
    }

    #[test]
    fn leaked_state_is_normalized() {
        let l = PauliLeak::Y.compose(PauliLeak::L);
        assert_eq!(l, PauliLeak::L);
        assert!(!l.x() && !l.z());
    }

    #[test]
    fn hadamard_swaps_components() {
        let mut f = frame_of(&[PauliLeak::X]);
        conjugate(&mut f, &Gate::single(GateKind::Hadamard, 0, 0).unwrap()).unwrap();
        assert_eq!(f.states, vec![PauliLeak::Z]);
        conjugate(&mut f, &Gate::single(GateKind::Hadamard, 0, 0).unwrap()).unwrap();
        assert_eq!(f.states, vec![PauliLeak::X]);
    }

    #[test]
    fn cz_spreads_x_as_z() {
        let cz = Gate::cz(0, 1, 0).unwrap();
        let mut f = frame_of(&[PauliLeak::X, PauliLeak::I]);
        conjugate(&mut f, &cz).unwrap();
        assert_eq!(f.states, vec![PauliLeak::X, PauliLeak::Z]);

        let mut f = frame_of(&[PauliLeak::I, PauliLeak::X]);
        conjugate(&mut f, &cz).unwrap();
        assert_eq!(f.states, vec![PauliLeak::Z, PauliLeak::X]);

        let mut f = frame_of(&[PauliLeak::Z, PauliLeak::Z]);
        conjugate(&mut f, &cz).unwrap();
        assert_eq!(f.states, vec![PauliLeak::Z, PauliLeak::Z]);

        let mut f = frame_of(&[PauliLeak::Y, PauliLeak::X]);
        conjugate(&mut f, &cz).unwrap();
        // Y⊗X -> (Y·Z)⊗(Z·X)
        assert_eq!(f.states, vec![PauliLeak::X, PauliLeak::Y]);
    }

    #[test]
    fn cz_never_transfers_leakage() {
        let cz = Gate::cz(0, 1, 0).unwrap();
        let mut f = frame_of(&[PauliLeak::L, PauliLeak::I]);
        conjugate(&mut f, &cz).unwrap();
        assert_eq!(f.states, vec![PauliLeak::L, PauliLeak::I]);

        let mut f = frame_of(&[PauliLeak::X, PauliLeak::L]);
        conjugate(&mut f, &cz).unwrap();
        assert_eq!(f.states, vec![PauliLeak::X, PauliLeak::L]);
    }

    #[test]
    fn out_of_range_operand_is_structural_error() {
        let mut f = frame_of(&[PauliLeak::I, PauliLeak::I]);
        let err = conjugate(&mut f, &Gate::cz(0, 2, 0).unwrap()).unwrap_err();
        assert_eq!(err, Error::QubitOutOfRange { index: 2, qubit_count: 2 });
    }

    #[test]
    fn gate_construction_checks_arity() {
        assert!(Gate::cz(3, 3, 0).is_err());
        assert!(Gate::single(GateKind::Cz, 1, 0).is_err());
        assert_eq!(Gate::cz(1, 2, 4).unwrap().operands(), &[1, 2]);
        assert_eq!(Gate::single(GateKind::Init, 5, 0).unwrap().operands(), &[5]);
    }

    #[test]
    fn measurement_and_init_are_not_conjugated() {
        let mut f = frame_of(&[PauliLeak::X]);
        assert!(conjugate(&mut f, &Gate::single(GateKind::Measure, 0, 0).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn compose_is_associative_and_commutative(a in any_state(), b in any_state(), c in any_state()) {
            prop_assert_eq!(a.compose(b), b.compose(a));
            prop_assert_eq!(a.compose(b).compose(c), a.compose(b.compose(c)));
        }

        #[test]
        fn gates_are_involutions(a in any_pauli(), b in any_pauli()) {
            for gate in [Gate::cz(0, 1, 0).unwrap(), Gate::single(GateKind::Hadamard, 0, 0).unwrap()] {
                let mut f = frame_of(&[a, b]);
                conjugate(&mut f, &gate).unwrap();
                conjugate(&mut f, &gate).unwrap();
                prop_assert_eq!(f.states, vec![a, b]);
            }
        }

        #[test]
        fn conjugation_preserves_leak_flags(a in any_state(), b in any_state()) {
            for gate in [
                Gate::cz(0, 1, 0).unwrap(),
                Gate::single(GateKind::Hadamard, 1, 0).unwrap(),
                Gate::single(GateKind::Identity, 0, 0).unwrap(),
            ] {
                let mut f = frame_of(&[a, b]);
                conjugate(&mut f, &gate).unwrap();
                prop_assert_eq!(f.states[0].is_leaked(), a.is_leaked());
                prop_assert_eq!(f.states[1].is_leaked(), b.is_leaked());
            }
        }
    }
}
