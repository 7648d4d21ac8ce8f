//! Quantum volume benchmarking toolkit.
//!
//! The crate is organised bottom-up:
//!
//! - [`circuit`] and [`qasm`]: the circuit IR shared by every other module and
//!   its text interchange format.
//! - [`model`]: seeded random model circuits (random pairings of Haar SU(4)
//!   blocks).
//! - [`weyl`]: canonical two-qubit decomposition, Weyl-chamber coordinates,
//!   exact and approximate CNOT-basis synthesis and the analytic fidelity
//!   distributions that go with it.
//! - [`transpiler`]: rewriting passes that map a circuit onto a coupling graph.
//! - [`simulator`]: statevector simulation, heavy-output sets and noisy
//!   stochastic-Pauli sampling.
//! - [`protocol`]: heavy-output test, confidence thresholds, achievable depth
//!   and the volume itself, plus the closed-form scaling estimate.

pub mod circuit;
pub mod error;
pub mod linalg;
pub mod model;
pub mod onequbit;
pub mod protocol;
pub mod qasm;
pub mod rng;
pub mod simulator;
pub mod transpiler;
pub mod weyl;

mod par;

pub use circuit::{Circuit, Gate, GateKind, Layer};
pub use error::{Error, Result};
pub use linalg::C64;
