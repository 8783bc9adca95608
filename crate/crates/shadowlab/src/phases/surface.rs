//! Rotated surface code: layout, GF(2) correction table and `|0_L⟩` preparation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{PhaseError, PhaseResult};
use crate::sim::{haar_single_qubit, run_circuit, Circuit, Gate, NoiseModel, Pauli, PauliString, StateVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCodeLayout {
    pub d_code: usize,
    /// `(row, col)` of data qubit `q = row·d + col`.
    pub coords: Vec<(usize, usize)>,
    pub x_plaquettes: Vec<Vec<usize>>,
    pub z_plaquettes: Vec<Vec<usize>>,
    pub logical_z: Vec<usize>,
    /// `corrections[p]` flips the sign of `B_p` alone: `|s ∩ p'| ≡ δ_{pp'} (mod 2)`.
    pub corrections: Vec<Vec<usize>>,
}

impl SurfaceCodeLayout {
    pub fn new(d: usize) -> PhaseResult<Self> {
        if !(2..=3).contains(&d) {
            return Err(PhaseError::UnsupportedDistance(d));
        }
        let di = d as i64;
        let mut xs = Vec::new();
        let mut zs = Vec::new();
        for i in -1..di {
            for j in -1..di {
                let x_type = (i + j).rem_euclid(2) == 0;
                let top_bottom = i == -1 || i == di - 1;
                let left_right = j == -1 || j == di - 1;
                if top_bottom && left_right {
                    continue;
                }
                // X faces may sit on the top and bottom edges only, Z faces on the sides
                if (top_bottom && !x_type) || (left_right && x_type) {
                    continue;
                }
                let support: Vec<usize> = [(i, j), (i, j + 1), (i + 1, j), (i + 1, j + 1)]
                    .into_iter()
                    .filter(|&(r, c)| (0..di).contains(&r) && (0..di).contains(&c))
                    .map(|(r, c)| (r * di + c) as usize)
                    .collect();
                if x_type {
                    xs.push(support);
                } else {
                    zs.push(support);
                }
            }
        }
        let corrections = (0..xs.len())
            .map(|p| {
                let rhs: Vec<bool> = (0..xs.len()).map(|k| k == p).collect();
                solve_gf2(&xs, d * d, &rhs).ok_or(PhaseError::Unsolvable)
            })
            .collect::<PhaseResult<Vec<_>>>()?;
        Ok(Self {
            d_code: d,
            coords: (0..d * d).map(|q| (q / d, q % d)).collect(),
            x_plaquettes: xs,
            z_plaquettes: zs,
            logical_z: (0..d).collect(),
            corrections,
        })
    }

    pub fn n_data(&self) -> usize {
        self.d_code * self.d_code
    }

    pub fn x_stabilizers(&self) -> Vec<PauliString> {
        self.strings(&self.x_plaquettes, Pauli::X)
    }

    pub fn z_stabilizers(&self) -> Vec<PauliString> {
        self.strings(&self.z_plaquettes, Pauli::Z)
    }

    pub fn stabilizers(&self) -> Vec<PauliString> {
        let mut s = self.x_stabilizers();
        s.extend(self.z_stabilizers());
        s
    }

    pub fn logical_z_string(&self) -> PauliString {
        self.strings(std::slice::from_ref(&self.logical_z), Pauli::Z).remove(0)
    }

    fn strings(&self, supports: &[Vec<usize>], p: Pauli) -> Vec<PauliString> {
        supports
            .iter()
            .map(|s| {
                let terms: Vec<(usize, Pauli)> = s.iter().map(|&q| (q, p)).collect();
                PauliString::from_sparse(self.n_data(), &terms, 1.0).expect("support inside patch")
            })
            .collect()
    }

    /// Z-support that fixes the given syndrome (bit `p` set when `B_p` read −1).
    pub fn correction_for(&self, syndrome: &[bool]) -> Vec<usize> {
        let mut flip = vec![false; self.n_data()];
        for (p, _) in syndrome.iter().enumerate().filter(|(_, &m)| m) {
            for &q in &self.corrections[p] {
                flip[q] ^= true;
            }
        }
        (0..self.n_data()).filter(|&q| flip[q]).collect()
    }
}

/// Some `x` with `Σ_{q∈rows[k]} x_q = rhs[k]` over GF(2), by Gauss-Jordan elimination.
fn solve_gf2(rows: &[Vec<usize>], n_vars: usize, rhs: &[bool]) -> Option<Vec<usize>> {
    let mut a: Vec<Vec<bool>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, &b)| {
            let mut row = vec![false; n_vars + 1];
            for &q in r {
                row[q] ^= true;
            }
            row[n_vars] = b;
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n_vars {
        let Some(p) = (r..a.len()).find(|&k| a[k][c]) else { continue };
        a.swap(r, p);
        for k in 0..a.len() {
            if k != r && a[k][c] {
                let src = a[r].clone();
                a[k].iter_mut().zip(src).for_each(|(x, y)| *x ^= y);
            }
        }
        pivots.push(c);
        r += 1;
    }
    if a[r..].iter().any(|row| row[n_vars]) {
        return None;
    }
    let mut x = vec![false; n_vars];
    for (k, &c) in pivots.iter().enumerate() {
        x[c] = a[k][n_vars];
    }
    Some((0..n_vars).filter(|&q| x[q]).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrepMode {
    /// `Π_p (I + B_p)|0⟩` normalised.
    Projector,
    /// Sequential ancilla readout of every `B_p` followed by conditional Z corrections.
    Protocol,
}

/// Measurement-assisted preparation on `n_data + 1` qubits; the ancilla is the top qubit
/// and measurement slot `p` holds the outcome for X-plaquette `p`.
pub fn protocol_circuit(layout: &SurfaceCodeLayout, correct: bool) -> Circuit {
    let n = layout.n_data();
    let anc = n;
    let mut c = Circuit::new(n + 1);
    for plaq in &layout.x_plaquettes {
        c.push(Gate::h(anc));
        for &q in plaq {
            c.push(Gate::cx(anc, q));
        }
        c.push(Gate::h(anc));
        c.measure(anc);
        c.reset(anc);
    }
    if correct {
        for q in 0..n {
            let slots: Vec<usize> = (0..layout.x_plaquettes.len()).filter(|&p| layout.corrections[p].contains(&q)).collect();
            if !slots.is_empty() {
                c.conditional(Gate::pauli(q, Pauli::Z), slots);
            }
        }
    }
    c
}

/// Random circuit on the data qubits with as many CX gates as [`protocol_circuit`]: each
/// CX sits on a random grid edge and follows Haar gates on its two qubits. Its output
/// has comparable gate complexity to `|0_L⟩` but no topological order.
pub fn complexity_matched_circuit<R: Rng + ?Sized>(layout: &SurfaceCodeLayout, rng: &mut R) -> Circuit {
    let d = layout.d_code;
    let edges = super::grid_edges(d, d);
    let n_cx: usize = layout.x_plaquettes.iter().map(Vec::len).sum();
    let mut c = Circuit::new(layout.n_data());
    for _ in 0..n_cx {
        let (a, b) = edges[rng.gen_range(0..edges.len())];
        let (a, b) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
        c.push(Gate::single(a, haar_single_qubit(rng)));
        c.push(Gate::single(b, haar_single_qubit(rng)));
        c.push(Gate::cx(a, b));
    }
    c
}

pub fn prepare_logical_zero<R: Rng + ?Sized>(
    layout: &SurfaceCodeLayout,
    mode: PrepMode,
    rng: &mut R,
) -> PhaseResult<StateVector> {
    let n = layout.n_data();
    match mode {
        PrepMode::Projector => {
            let mut s = StateVector::zero(n)?;
            for b in layout.x_stabilizers() {
                let mut flipped = s.clone();
                flipped.apply_pauli_string(&b)?;
                let amps = s.amplitudes().iter().zip(flipped.amplitudes()).map(|(a, f)| a + f).collect();
                s = StateVector::from_unnormalized(n, amps)?;
            }
            Ok(s)
        }
        PrepMode::Protocol => {
            let start = StateVector::zero(n + 1)?;
            let (s, _) = run_circuit(&start, &protocol_circuit(layout, true), &NoiseModel::noiseless(), rng)?;
            Ok(s.drop_top_qubits(1)?)
        }
    }
}
