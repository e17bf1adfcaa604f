use thiserror::Error;

use crate::qstate::Mode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("amplitude count {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("cannot build a state from the zero vector")]
    ZeroVector,

    #[error("state norm {0} is not within 1e-9 of 1")]
    NotNormalized(f64),

    #[error("{requested} qubits exceeds the dense simulation limit of {limit}")]
    TooManyQubits { requested: usize, limit: usize },

    #[error("register {0} appears on both sides of a tensor product")]
    RegisterCollision(Mode),

    #[error("invalid register map: {0}")]
    InvalidRegisters(String),

    #[error("state has no register {0}")]
    UnknownRegister(Mode),

    #[error("qubit {qubit} out of range for a {num_qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },

    #[error("qubit {0} listed more than once")]
    DuplicateQubit(usize),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },

    #[error("outcome {outcome} out of range (only {count} outcomes)")]
    OutcomeOutOfRange { outcome: usize, count: usize },

    #[error("forced outcome {outcome} has probability {probability:e}, branch is unreachable")]
    ImpossibleOutcome { outcome: usize, probability: f64 },

    #[error("index {index} out of range for {digits} quaternary digits")]
    IndexOutOfRange { index: usize, digits: usize },

    #[error("not a permutation: {0}")]
    InvalidPermutation(String),

    #[error("unsupported resource: {0}")]
    Unconstructible(String),

    #[error("{party} may not touch register {mode}")]
    ForeignRegister { party: &'static str, mode: Mode },

    #[error("protocol out of order: {0}")]
    ProtocolOrder(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
