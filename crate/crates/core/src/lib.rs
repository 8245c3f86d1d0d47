//! Circuit-level Monte Carlo simulation of the repetition code under
//! depolarizing noise and qubit leakage, with a minimum-weight perfect
//! matching decoder and an optional teleportation step that removes leakage
//! from data qubits every round.

pub mod circuits;
pub mod dgraph;
pub mod engine;
mod error;
pub mod matcher;
pub mod noise;
pub mod pauli;

pub use circuits::{build_experiment, CodeParams, Mode, Schedule};
pub use dgraph::{build_graph, Dot, FaultTable, MatchingGraph};
pub use engine::{estimate, DetectionEventSet, Experiment, LogicalErrorEstimate, ShotResult};
pub use error::{Error, Result};
pub use matcher::Decoder;
pub use noise::{NoiseParams, RngStream};
pub use pauli::{Gate, GateKind, PauliLeak, SystemFrame};
