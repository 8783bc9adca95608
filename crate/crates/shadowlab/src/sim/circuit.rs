use serde::{Deserialize, Serialize};

use super::mat::{self, Mat2};
use super::pauli::Pauli;
use super::state::StateVector;
use super::{SimError, SimResult};

const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Single { qubit: usize, matrix: Mat2 },
    Cx { control: usize, target: usize },
    Cz { a: usize, b: usize },
    /// `exp(iθP)` with `P` acting on at most two qubits.
    PauliExp { theta: f64, paulis: Vec<(usize, Pauli)> },
}

impl Gate {
    pub fn single(qubit: usize, matrix: Mat2) -> Gate {
        Gate::Single { qubit, matrix }
    }

    pub fn pauli(qubit: usize, p: Pauli) -> Gate {
        Gate::Single { qubit, matrix: p.matrix() }
    }

    pub fn h(qubit: usize) -> Gate {
        Gate::Single { qubit, matrix: mat::hadamard() }
    }

    pub fn ry(qubit: usize, theta: f64) -> Gate {
        Gate::Single { qubit, matrix: mat::ry(theta) }
    }

    pub fn cx(control: usize, target: usize) -> Gate {
        Gate::Cx { control, target }
    }

    pub fn cz(a: usize, b: usize) -> Gate {
        Gate::Cz { a, b }
    }

    pub fn support(&self) -> Vec<usize> {
        match self {
            Gate::Single { qubit, .. } => vec![*qubit],
            Gate::Cx { control, target } => vec![*control, *target],
            Gate::Cz { a, b } => vec![*a, *b],
            Gate::PauliExp { paulis, .. } => paulis.iter().map(|p| p.0).collect(),
        }
    }

    pub fn validate(&self, n: usize) -> SimResult<()> {
        let support = self.support();
        for (k, &q) in support.iter().enumerate() {
            if q >= n {
                return Err(SimError::QubitOutOfRange { qubit: q, n });
            }
            if support[..k].contains(&q) {
                return Err(SimError::DuplicateQubits(q));
            }
        }
        match self {
            Gate::Single { matrix, .. } => {
                if mat::unitarity_error2(matrix) > UNITARY_TOL {
                    return Err(SimError::NonUnitary);
                }
            }
            Gate::PauliExp { theta, paulis } => {
                if paulis.len() > 2 {
                    return Err(SimError::PauliExpTooWide(paulis.len()));
                }
                if !theta.is_finite() {
                    return Err(SimError::NonFinite);
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Applies the gate without re-validating unitarity.
    pub fn apply(&self, state: &mut StateVector) -> SimResult<()> {
        match self {
            Gate::Single { qubit, matrix } => state.apply_single(*qubit, matrix),
            Gate::Cx { control, target } => state.apply_cx(*control, *target),
            Gate::Cz { a, b } => state.apply_cz(*a, *b),
            Gate::PauliExp { theta, paulis } => state.apply_pauli_exp(*theta, paulis),
        }
    }
}

/// Validates then applies `gate` to a copy of `state`.
pub fn apply_gate(state: &StateVector, gate: &Gate) -> SimResult<StateVector> {
    gate.validate(state.n_qubits())?;
    let mut out = state.clone();
    gate.apply(&mut out)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Op {
    Gate(Gate),
    /// Projective Z measurement recorded into a classical slot.
    Measure { qubit: usize, slot: usize },
    Reset { qubit: usize },
    /// Fires when the XOR of the listed slots is 1.
    Conditional { gate: Gate, parity_of: Vec<usize> },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<Op>,
    n_slots: usize,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, ops: Vec::new(), n_slots: 0 }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.ops.push(Op::Gate(gate));
        self
    }

    pub fn extend_gates<I: IntoIterator<Item = Gate>>(&mut self, gates: I) -> &mut Self {
        self.ops.extend(gates.into_iter().map(Op::Gate));
        self
    }

    /// Appends all operations of `other`, shifting its classical slots.
    pub fn append(&mut self, other: &Circuit) -> &mut Self {
        let offset = self.n_slots;
        for op in &other.ops {
            self.ops.push(match op {
                Op::Measure { qubit, slot } => Op::Measure { qubit: *qubit, slot: slot + offset },
                Op::Conditional { gate, parity_of } => Op::Conditional {
                    gate: gate.clone(),
                    parity_of: parity_of.iter().map(|s| s + offset).collect(),
                },
                other => other.clone(),
            });
        }
        self.n_slots += other.n_slots;
        self
    }

    /// Adds a measurement and returns its slot index.
    pub fn measure(&mut self, qubit: usize) -> usize {
        let slot = self.n_slots;
        self.n_slots += 1;
        self.ops.push(Op::Measure { qubit, slot });
        slot
    }

    pub fn reset(&mut self, qubit: usize) -> &mut Self {
        self.ops.push(Op::Reset { qubit });
        self
    }

    pub fn conditional(&mut self, gate: Gate, parity_of: Vec<usize>) -> &mut Self {
        self.ops.push(Op::Conditional { gate, parity_of });
        self
    }

    pub fn gate_count(&self) -> usize {
        self.ops.iter().filter(|o| matches!(o, Op::Gate(_) | Op::Conditional { .. })).count()
    }

    pub fn is_unitary_only(&self) -> bool {
        self.ops.iter().all(|o| matches!(o, Op::Gate(_)))
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.ops.iter().filter_map(|o| match o {
            Op::Gate(g) => Some(g),
            _ => None,
        })
    }

    /// Checks qubit ranges, unitarity and that conditions only read earlier measurements.
    pub fn validate(&self) -> SimResult<()> {
        let mut measured = vec![false; self.n_slots];
        for op in &self.ops {
            match op {
                Op::Gate(g) => g.validate(self.n_qubits)?,
                Op::Measure { qubit, slot } => {
                    if *qubit >= self.n_qubits {
                        return Err(SimError::QubitOutOfRange { qubit: *qubit, n: self.n_qubits });
                    }
                    measured[*slot] = true;
                }
                Op::Reset { qubit } => {
                    if *qubit >= self.n_qubits {
                        return Err(SimError::QubitOutOfRange { qubit: *qubit, n: self.n_qubits });
                    }
                }
                Op::Conditional { gate, parity_of } => {
                    gate.validate(self.n_qubits)?;
                    for &s in parity_of {
                        if s >= measured.len() || !measured[s] {
                            return Err(SimError::SlotNotMeasured(s));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
