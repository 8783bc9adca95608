//! Dense statevector simulation: gates, circuits with mid-circuit measurement,
//! stochastic Pauli noise, sampling and Haar-random single-qubit unitaries.

pub mod circuit;
pub mod haar;
pub mod mat;
pub mod noise;
pub mod pauli;
pub mod run;
pub mod state;
pub mod twirl;

use thiserror::Error;

pub use circuit::{apply_gate, Circuit, Gate, Op};
pub use haar::haar_single_qubit;
pub use mat::{Mat2, Mat4};
pub use noise::NoiseModel;
pub use pauli::{Pauli, PauliString};
pub use run::{
    circuit_unitary, run_circuit, run_circuit_postselected, sample_counts, sample_noisy_counts,
    sample_outcome,
    Histogram,
};
pub use state::{expectation, StateVector};
pub use twirl::pauli_twirl;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("qubit {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("qubit {0} used twice in one gate")]
    DuplicateQubits(usize),
    #[error("gate matrix is not unitary")]
    NonUnitary,
    #[error("pauli exponential acts on {0} qubits (max 2)")]
    PauliExpTooWide(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("state norm {0} is not 1")]
    NotNormalized(f64),
    #[error("{0} qubits exceeds the simulator limit")]
    TooManyQubits(usize),
    #[error("non-finite parameter")]
    NonFinite,
    #[error("bad label {0:?}")]
    BadLabel(String),
    #[error("classical slot {0} read before it was measured")]
    SlotNotMeasured(usize),
    #[error("noise rates must lie in [0, 1]")]
    InvalidRate,
    #[error("shots must be positive")]
    ZeroShots,
    #[error("only CX and CZ can be twirled")]
    NonCliffordTwirl,
    #[error("outcome {outcome} on qubit {qubit} has zero probability")]
    ImpossibleOutcome { qubit: usize, outcome: bool },
    #[error("reset of qubit {0} is not deterministic in a post-selected run")]
    NondeterministicReset(usize),
    #[error("circuit contains measurements or conditionals")]
    NotUnitaryOnly,
    #[error("discarded qubits carry weight {0:e} outside |0⟩")]
    NotInZero(f64),
}

pub type SimResult<T> = Result<T, SimError>;
