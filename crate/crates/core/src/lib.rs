//! Exact state-vector simulation and noise stress-testing of two protocols for
//! preparing nuclear excited states on a quantum register: short-time evolution
//! with ancilla post-selection, and a linear-combination-of-unitaries (LCU)
//! block encoding of the excitation operator.
//!
//! The crate is organized around the experiment pipeline:
//!
//! - [`sim`] — dense state vectors, gate application, measurement, sampling,
//!   post-selection and fidelity.
//! - [`gates`] — gate set, circuits, connectivity graphs, the circuit text
//!   format, and CNOT accounting.
//! - [`synth`] — ZYZ Euler decomposition, two-CNOT controlled unitaries and
//!   connectivity-aware SWAP routing.
//! - [`ops`] — excitation operators as weighted Pauli sums, their norms, and
//!   dense matrix functions (`exp`, `sin`, `cos`).
//! - [`prep`] — explicit optimized state-preparation circuits for both
//!   protocols, plus a block-encoding verifier.
//! - [`bounds`] — analytic success-probability and fidelity bounds.
//! - [`estimators`] — exact and sampled protocol observables.
//! - [`noise`] — readout flips, per-CNOT depolarizing trajectories, noise
//!   amplification and calibration experiments.
//! - [`mitigation`] — readout inversion, zero-noise extrapolation, the
//!   consistency-check/combination pipeline and the quality metrics.
//! - [`experiment`] — batch sweeps over operator angles with CSV/JSON output.
//!
//! # Conventions
//!
//! Qubit 0 is the least-significant bit of a basis-state index. A bitstring
//! such as `"10"` lists qubit 0 first, so `"10"` denotes the basis state with
//! qubit 0 set and qubit 1 clear (index 1). States compare equal up to global
//! phase; fidelity is the canonical comparator. All stochastic operations take
//! an explicit seed and are deterministic for a fixed seed.

pub mod bounds;
pub mod estimators;
pub mod experiment;
pub mod gates;
pub mod mitigation;
pub mod noise;
pub mod ops;
pub mod prep;
pub mod sim;
pub mod synth;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    IndexOutOfRange { index: usize, n_qubits: usize },
    #[error("duplicate qubit {0} in gate operands")]
    DuplicateQubit(usize),
    #[error("gate {kind} expects {expected} {what}, got {got}")]
    BadGateShape {
        kind: &'static str,
        expected: usize,
        got: usize,
        what: &'static str,
    },
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NonUnitary(f64),
    #[error("post-selection outcome has probability {0:.3e}, below threshold")]
    ImpossibleOutcome(f64),
    #[error("state norm vanished (eta = {0:.3e})")]
    ZeroNorm(f64),
    #[error("connectivity graph is disconnected")]
    DisconnectedGraph,
    #[error("two-qubit gate on ({0}, {1}) is not a connectivity edge")]
    EdgeViolation(usize, usize),
    #[error("dimension {0} too large for dense matrix functions")]
    DimensionTooLarge(usize),
    #[error("unknown variant: {0}")]
    UnknownVariant(String),
    #[error("readout calibration not invertible on qubit {0} (e0 + e1 >= 1)")]
    SingularCalibration(usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("extrapolation strategy failed: {0}")]
    StrategyFailed(String),
    #[error("all mitigation strategies failed")]
    AllFailed,
    #[error("empty distribution")]
    EmptyDistribution,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use estimators::Estimate;
pub use gates::{Circuit, Connectivity, GateKind, PlacedGate};
pub use noise::NoiseSpec;
pub use ops::PauliSum;
pub use sim::StateVector;
