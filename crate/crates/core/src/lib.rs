//! Simulation of secure quantum information exchange (SQIE).
//!
//! Alice holds an `m`-qubit state, Bob an `n`-qubit state, and the two swap
//! them through a shared entangled resource whose third part sits with a
//! controller, Charlie. Alice and Bob each perform a generalized Bell state
//! measurement, report the result to Charlie, and Charlie (after measuring his
//! own qubits in the computational basis) tells each of them which Pauli-string
//! correction recovers the partner's state.
//!
//! Modules, bottom-up:
//!
//! - [`qstate`]: dense statevector engine with named registers.
//! - [`pauli`]: quaternary Pauli strings and the generalized Bell basis.
//! - [`resource`]: the shared entangled resources (including the reduced-security
//!   variants with fewer or more qubits on Charlie's side).
//! - [`protocol`]: the three parties as state machines over an ordered classical
//!   channel, plus exhaustive branch enumeration.
//! - [`security`]: probability that Alice and Bob succeed while bypassing Charlie.
//! - [`cli`]: command-line harness and file formats.

pub mod cli;
pub mod error;
pub mod pauli;
pub mod protocol;
pub mod qstate;
pub mod resource;
pub mod rng;
pub mod security;

pub use error::{Error, Result};
pub use pauli::{GbsIndex, Pauli, PauliString, Sign};
pub use protocol::{ExchangeChoice, ExchangeTranscript, Routing};
pub use qstate::{Mode, QuantumState, RegisterMap, Selection};
pub use resource::{ChannelPair, Permutation, Resource, ResourceSpec};
pub use security::{BypassStrategy, SecurityReport};
