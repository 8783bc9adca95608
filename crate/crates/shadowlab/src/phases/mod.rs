//! Phase fixtures: cluster and product fixed points, symmetric and local random
//! circuits, string order parameters, the rotated surface code, Cluster-Ising ground
//! states and labelled shadow datasets.

mod dataset;
mod ising;
mod surface;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{expectation, haar_single_qubit, mat, Circuit, Gate, Pauli, PauliString, SimError, StateVector};

pub use dataset::{
    build_spt_dataset, build_topo_dataset, load_manifest, save_dataset, DatasetEntry, PhaseDataset, SptConfig,
    TopoConfig, TopoPreparation,
};
pub use ising::{
    apply_cluster_ising, cluster_ising_dense, cluster_ising_ground, lanczos_ground, ClusterIsingSpec, GroundResult,
    MAX_QUBITS,
};
pub use surface::{complexity_matched_circuit, prepare_logical_zero, protocol_circuit, PrepMode, SurfaceCodeLayout};

#[derive(Debug, Error)]
pub enum PhaseError {
    #[error("need at least {min} qubits, got {got}")]
    TooFewQubits { min: usize, got: usize },
    #[error("brickwork layers need an even qubit count, got {0}")]
    OddQubits(usize),
    #[error("string order parameter needs b − a even and at least 2, got ({0}, {1})")]
    SopParity(usize, usize),
    #[error("unsupported code distance {0}")]
    UnsupportedDistance(usize),
    #[error("unknown symmetry tag {0:?}")]
    UnknownSymmetry(String),
    #[error("eigensolver did not converge (residual {0:e})")]
    NoConvergence(f64),
    #[error("circuit depth {0} outside [0, 5]")]
    Depth(usize),
    #[error("GF(2) system has no solution")]
    Unsolvable,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Shadow(#[from] crate::shadows::ShadowError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type PhaseResult<T> = Result<T, PhaseError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryClass {
    #[serde(rename = "Z2xZ2")]
    Z2xZ2,
    #[serde(rename = "TRS")]
    Trs,
    #[serde(rename = "none")]
    None,
}

impl std::str::FromStr for SymmetryClass {
    type Err = PhaseError;

    fn from_str(s: &str) -> PhaseResult<Self> {
        match s {
            "Z2xZ2" | "z2xz2" => Ok(SymmetryClass::Z2xZ2),
            "TRS" | "trs" => Ok(SymmetryClass::Trs),
            "none" | "None" => Ok(SymmetryClass::None),
            other => Err(PhaseError::UnknownSymmetry(other.to_string())),
        }
    }
}

impl SymmetryClass {
    /// Two-qubit Pauli generators `P` for gates `e^{iθP}`, as (first, second) letters.
    pub fn generators(self) -> Vec<[Pauli; 2]> {
        use Pauli::*;
        match self {
            SymmetryClass::Z2xZ2 => vec![[I, I], [X, I], [I, X], [X, X]],
            SymmetryClass::Trs => vec![[I, I], [Z, I], [I, Z], [Z, Y], [Y, Z], [Z, X], [X, Z]],
            SymmetryClass::None => (0..16).map(|k| [Pauli::from_index(k & 3), Pauli::from_index(k >> 2)]).collect(),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            SymmetryClass::Z2xZ2 => "Z2xZ2",
            SymmetryClass::Trs => "TRS",
            SymmetryClass::None => "none",
        }
    }
}

/// Graph state on a ring: `H^{⊗n}` followed by CZ on every edge `(i, i+1 mod n)`.
pub fn prepare_cluster(n: usize) -> PhaseResult<StateVector> {
    if n < 3 {
        return Err(PhaseError::TooFewQubits { min: 3, got: n });
    }
    let mut s = StateVector::zero(n)?;
    for q in 0..n {
        s.apply_single(q, &mat::hadamard())?;
    }
    for q in 0..n {
        s.apply_cz(q, (q + 1) % n)?;
    }
    Ok(s)
}

pub fn prepare_product_x(n: usize) -> PhaseResult<StateVector> {
    let mut s = StateVector::zero(n)?;
    for q in 0..n {
        s.apply_single(q, &mat::hadamard())?;
    }
    Ok(s)
}

/// `Z_{i−1} X_i Z_{i+1}` with ring indices.
pub fn cluster_stabilizer(n: usize, i: usize) -> PhaseResult<PauliString> {
    Ok(PauliString::from_sparse(n, &[((i + n - 1) % n, Pauli::Z), (i, Pauli::X), ((i + 1) % n, Pauli::Z)], 1.0)?)
}

/// `S_ab = Z_a X_{a+1} X_{a+3} ⋯ X_{b−1} Z_b`.
pub fn sop_string(n: usize, a: usize, b: usize) -> PhaseResult<PauliString> {
    if b <= a || !(b - a).is_multiple_of(2) || b >= n {
        return Err(PhaseError::SopParity(a, b));
    }
    let mut terms = vec![(a, Pauli::Z)];
    terms.extend((a + 1..b).step_by(2).map(|k| (k, Pauli::X)));
    terms.push((b, Pauli::Z));
    Ok(PauliString::from_sparse(n, &terms, 1.0)?)
}

pub fn sop(state: &StateVector, a: usize, b: usize) -> PhaseResult<f64> {
    Ok(expectation(state, &sop_string(state.n_qubits(), a, b)?)?)
}

/// One sampled gate of a symmetric random circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledGate {
    pub layer: usize,
    pub qubits: [usize; 2],
    pub paulis: String,
    pub theta: f64,
}

/// Brickwork of `e^{iθP}` gates with `P` drawn from the symmetry's generator set:
/// even layers act on `(0,1), (2,3), …`, odd layers on `(1,2), …, (n−1, 0)`.
pub fn symmetric_random_circuit<R: Rng + ?Sized>(
    n: usize,
    symmetry: SymmetryClass,
    layers: usize,
    rng: &mut R,
) -> PhaseResult<(Circuit, Vec<SampledGate>)> {
    if n < 2 {
        return Err(PhaseError::TooFewQubits { min: 2, got: n });
    }
    if !n.is_multiple_of(2) {
        return Err(PhaseError::OddQubits(n));
    }
    let gens = symmetry.generators();
    let mut c = Circuit::new(n);
    let mut record = Vec::new();
    for layer in 0..layers {
        for k in 0..n / 2 {
            let a = (2 * k + layer % 2) % n;
            let b = (a + 1) % n;
            let p = gens[rng.gen_range(0..gens.len())];
            let theta = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let paulis: Vec<(usize, Pauli)> = [(a, p[0]), (b, p[1])].into_iter().filter(|(_, l)| *l != Pauli::I).collect();
            // e^{iθI} is a global phase
            if !paulis.is_empty() {
                c.push(Gate::PauliExp { theta, paulis });
            }
            record.push(SampledGate {
                layer,
                qubits: [a, b],
                paulis: format!("{}{}", p[0].to_char(), p[1].to_char()),
                theta,
            });
        }
    }
    Ok((c, record))
}

/// Disjoint CX layers covering `edges`, greedily coloured in order.
pub fn edge_matchings(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    let mut layers: Vec<(Vec<(usize, usize)>, Vec<bool>)> = Vec::new();
    for &e in edges {
        match layers.iter_mut().find(|(_, used)| !used[e.0] && !used[e.1]) {
            Some((l, used)) => {
                used[e.0] = true;
                used[e.1] = true;
                l.push(e);
            }
            None => {
                let mut used = vec![false; n];
                used[e.0] = true;
                used[e.1] = true;
                layers.push((vec![e], used));
            }
        }
    }
    layers.into_iter().map(|(l, _)| l).collect()
}

/// `d_lu` layers, each Haar single-qubit gates on every qubit followed by CX on one
/// matching of `edges` (cycled layer by layer).
pub fn local_random_circuit<R: Rng + ?Sized>(
    n: usize,
    edges: &[(usize, usize)],
    d_lu: usize,
    rng: &mut R,
) -> PhaseResult<Circuit> {
    if d_lu > 5 {
        return Err(PhaseError::Depth(d_lu));
    }
    let matchings = edge_matchings(n, edges);
    let mut c = Circuit::new(n);
    for layer in 0..d_lu {
        for q in 0..n {
            c.push(Gate::single(q, haar_single_qubit(rng)));
        }
        if !matchings.is_empty() {
            for &(a, b) in &matchings[layer % matchings.len()] {
                c.push(Gate::cx(a, b));
            }
        }
    }
    Ok(c)
}

/// Nearest-neighbour edges of a `rows × cols` grid, row-major qubit order.
pub fn grid_edges(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let q = r * cols + c;
            if c + 1 < cols {
                e.push((q, q + 1));
            }
            if r + 1 < rows {
                e.push((q, q + cols));
            }
        }
    }
    e
}
