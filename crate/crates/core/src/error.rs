use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit index {index} out of range for {qubit_count} qubits")]
    QubitOutOfRange { index: u32, qubit_count: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("invalid code parameters: {0}")]
    InvalidCode(String),

    #[error("invalid noise parameters: {0}")]
    InvalidNoise(String),

    #[error("incomplete measurement record: expected {expected} bits, got {got}")]
    IncompleteRecord { expected: usize, got: usize },

    #[error("detection event {0} is not a dot of the matching graph")]
    UnknownDot(String),

    #[error("matching graph: {0}")]
    Graph(String),
}

pub type Result<T> = std::result::Result<T, Error>;
