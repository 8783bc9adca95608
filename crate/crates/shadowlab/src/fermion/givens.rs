use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{FermionError, FermionResult};
use crate::sim::{Circuit, Gate, Mat4, Pauli};

/// Rotation of modes `(site, site + 1)` by the single-particle matrix `[[c, -s], [s, c]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub site: usize,
    pub theta: f64,
}

/// Givens rotations in application order, acting on the reference state with
/// modes `0..n_occ` filled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GivensNetwork {
    pub n: usize,
    pub n_occ: usize,
    pub rotations: Vec<Rotation>,
}

impl GivensNetwork {
    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }
}

fn rotate_columns(m: &mut DMatrix<f64>, j: usize, theta: f64) {
    // applies the site rotation to every row vector of `m` (row-vector convention q ← R q)
    let (s, c) = theta.sin_cos();
    for r in 0..m.nrows() {
        let (a, b) = (m[(r, j)], m[(r, j + 1)]);
        m[(r, j)] = c * a - s * b;
        m[(r, j + 1)] = s * a + c * b;
    }
}

fn rotate_rows(m: &mut DMatrix<f64>, r: usize, theta: f64) {
    let (s, c) = theta.sin_cos();
    for j in 0..m.ncols() {
        let (a, b) = (m[(r, j)], m[(r + 1, j)]);
        m[(r, j)] = c * a - s * b;
        m[(r + 1, j)] = s * a + c * b;
    }
}

/// Compiles the Slater determinant spanned by the rows of `q` into `n_occ·(n − n_occ)`
/// adjacent rotations.
pub fn givens_decompose(q: &DMatrix<f64>) -> FermionResult<GivensNetwork> {
    let (eta, n) = (q.nrows(), q.ncols());
    let gram = q * q.transpose();
    let err = (gram - DMatrix::identity(eta, eta)).amax();
    if err > 1e-10 {
        return Err(FermionError::NotOrthonormal(err));
    }
    let mut w = q.clone();
    // Row mixing (free): zero w[k, j] for j > n - eta + k, pushing weight down the rows.
    for j in ((n - eta + 1)..n).rev() {
        let pivot = j - (n - eta);
        for k in 0..pivot {
            let (a, b) = (w[(k, j)], w[(k + 1, j)]);
            // choose θ so the rotated row k entry vanishes: c a - s b = 0
            let theta = a.atan2(b);
            rotate_rows(&mut w, k, theta);
        }
    }
    // Site rotations: move row k onto mode k, right to left.
    let mut eliminated = Vec::with_capacity(eta * (n - eta));
    for k in 0..eta {
        for j in ((k + 1)..=(n - eta + k)).rev() {
            let (a, b) = (w[(k, j - 1)], w[(k, j)]);
            let theta = (-b).atan2(a);
            rotate_columns(&mut w, j - 1, theta);
            eliminated.push(Rotation { site: j - 1, theta });
        }
    }
    let rotations = eliminated.into_iter().rev().map(|r| Rotation { site: r.site, theta: -r.theta }).collect();
    Ok(GivensNetwork { n, n_occ: eta, rotations })
}

/// Single-particle matrix `G_m ⋯ G_1` of a network (first rotation rightmost).
pub fn network_unitary(net: &GivensNetwork) -> DMatrix<f64> {
    let mut u = DMatrix::identity(net.n, net.n);
    for r in &net.rotations {
        let (s, c) = r.theta.sin_cos();
        for col in 0..net.n {
            let (a, b) = (u[(r.site, col)], u[(r.site + 1, col)]);
            u[(r.site, col)] = c * a - s * b;
            u[(r.site + 1, col)] = s * a + c * b;
        }
    }
    u
}

/// Two-qubit matrix of a mode rotation; local index is `b_site + 2 b_{site+1}`.
pub fn givens_matrix(theta: f64) -> Mat4 {
    let (s, c) = theta.sin_cos();
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let (cc, ss) = (C64::new(c, 0.0), C64::new(s, 0.0));
    [[o, z, z, z], [z, cc, -ss, z], [z, ss, cc, z], [z, z, z, o]]
}

/// Eigenvalues of `(XX + YY)/4` on the basis produced by `givens_matrix(π/4)`, indexed
/// like the local two-qubit basis: measuring after `givens_matrix(-π/4)` and averaging
/// these values gives `Re⟨a_site† a_{site+1}⟩`.
pub fn parity_eigenvalues() -> [f64; 4] {
    [0.0, 0.5, -0.5, 0.0]
}

/// Two CNOTs around a pair of Y rotations, dressed by fixed Ry(∓π/2) on the lower qubit.
pub fn givens_block_gates(site: usize, theta: f64) -> Vec<Gate> {
    let (a, b) = (site, site + 1);
    let half = std::f64::consts::FRAC_PI_2;
    vec![
        Gate::ry(a, -half),
        Gate::cx(a, b),
        Gate::ry(a, -theta),
        Gate::ry(b, theta),
        Gate::cx(a, b),
        Gate::ry(a, half),
    ]
}

/// Reference-state preparation (X on the first `n_occ` qubits) followed by the network.
pub fn prepare_circuit(net: &GivensNetwork) -> Circuit {
    let mut c = Circuit::new(net.n);
    for q in 0..net.n_occ {
        c.push(Gate::pauli(q, Pauli::X));
    }
    c.append(&givens_to_circuit(net));
    c
}

pub fn givens_to_circuit(net: &GivensNetwork) -> Circuit {
    let mut c = Circuit::new(net.n);
    for r in &net.rotations {
        c.extend_gates(givens_block_gates(r.site, r.theta));
    }
    c
}

/// Absorbs the parity-basis rotation `givens_matrix(-π/4)` on each `(p, p + 1)` into the
/// orbitals and re-decomposes, keeping the rotation count.
pub fn recompile_parity(net: &GivensNetwork, pairs: &[usize]) -> FermionResult<GivensNetwork> {
    check_pairs(net.n, pairs)?;
    let u = network_unitary(net);
    let mut q = u.columns(0, net.n_occ).transpose();
    for &p in pairs {
        rotate_columns(&mut q, p, -std::f64::consts::FRAC_PI_4);
    }
    givens_decompose(&q)
}

pub(crate) fn check_pairs(n: usize, pairs: &[usize]) -> FermionResult<()> {
    let mut used = vec![false; n];
    for &p in pairs {
        if p + 1 >= n || used[p] || used[p + 1] {
            return Err(FermionError::BadPairs);
        }
        used[p] = true;
        used[p + 1] = true;
    }
    Ok(())
}

/// Rotates mode columns `(site, site + 1)` of an orbital matrix.
pub(crate) fn rotate_orbitals(q: &mut DMatrix<f64>, site: usize, theta: f64) {
    rotate_columns(q, site, theta);
}
