//! Cluster-Ising chain `H = −J Σ Z_{i−1} X_i Z_{i+1} − h₁ Σ X_i − h₂ Σ X_i X_{i+1}` on a ring,
//! solved matrix-free by restarted Lanczos.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{PhaseError, PhaseResult};
use crate::sim::StateVector;

pub const MAX_QUBITS: usize = 14;
const KRYLOV_DIM: usize = 120;
const MAX_RESTARTS: usize = 30;
const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterIsingSpec {
    pub n: usize,
    pub j: f64,
    pub h1: f64,
    pub h2: f64,
}

impl ClusterIsingSpec {
    pub fn new(n: usize, h1: f64, h2: f64) -> Self {
        Self { n, j: 1.0, h1, h2 }
    }

    fn validate(&self) -> PhaseResult<()> {
        if self.n < 3 {
            return Err(PhaseError::TooFewQubits { min: 3, got: self.n });
        }
        if self.n > MAX_QUBITS {
            return Err(PhaseError::Sim(crate::sim::SimError::TooManyQubits(self.n)));
        }
        Ok(())
    }
}

/// `out = H v`. Every term flips bits, so `H` has an empty diagonal.
pub fn apply_cluster_ising(spec: &ClusterIsingSpec, v: &[f64], out: &mut [f64]) {
    let n = spec.n;
    out.iter_mut().for_each(|o| *o = 0.0);
    for (b, &amp) in v.iter().enumerate() {
        if amp == 0.0 {
            continue;
        }
        for i in 0..n {
            let l = (i + n - 1) % n;
            let r = (i + 1) % n;
            let parity = ((b >> l) ^ (b >> r)) & 1;
            let sign = if parity == 1 { -1.0 } else { 1.0 };
            out[b ^ (1 << i)] -= (spec.j * sign + spec.h1) * amp;
            out[b ^ (1 << i) ^ (1 << r)] -= spec.h2 * amp;
        }
    }
}

pub fn cluster_ising_dense(spec: &ClusterIsingSpec) -> PhaseResult<DMatrix<f64>> {
    spec.validate()?;
    let dim = 1usize << spec.n;
    let mut h = DMatrix::zeros(dim, dim);
    let mut e = vec![0.0; dim];
    let mut col = vec![0.0; dim];
    for k in 0..dim {
        e[k] = 1.0;
        apply_cluster_ising(spec, &e, &mut col);
        h.set_column(k, &DVector::from_column_slice(&col));
        e[k] = 0.0;
    }
    Ok(h)
}

#[derive(Clone, Debug)]
pub struct GroundResult {
    pub state: StateVector,
    pub energy: f64,
    pub residual: f64,
    pub restarts: usize,
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    norm
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lowest eigenpair of a real symmetric operator given as `apply(v, out)`.
///
/// Lanczos with full reorthogonalisation, restarted from the current Ritz vector until
/// `‖Hψ − Eψ‖ ≤ tol`.
pub fn lanczos_ground<F>(dim: usize, apply: F, tol: f64) -> PhaseResult<(Vec<f64>, f64, f64, usize)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_2f05);
    let mut start: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
    normalize(&mut start);
    let m_max = KRYLOV_DIM.min(dim);
    let mut hv = vec![0.0; dim];
    let mut last_res = f64::INFINITY;
    for restart in 0..MAX_RESTARTS {
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for k in 0..m_max {
            apply(&basis[k], &mut hv);
            let a = dot(&basis[k], &hv);
            alpha.push(a);
            let mut w = hv.clone();
            // two passes of Gram-Schmidt keep the basis orthogonal to machine precision
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if k + 1 == m_max || b < 1e-12 {
                break;
            }
            beta.push(b);
            w.iter_mut().for_each(|x| *x /= b);
            basis.push(w);
        }
        let m = alpha.len();
        let mut t = DMatrix::zeros(m, m);
        for k in 0..m {
            t[(k, k)] = alpha[k];
            if k + 1 < m {
                t[(k, k + 1)] = beta[k];
                t[(k + 1, k)] = beta[k];
            }
        }
        let eig = SymmetricEigen::new(t);
        let idx = eig.eigenvalues.imin();
        let y = eig.eigenvectors.column(idx);
        let mut psi = vec![0.0; dim];
        for (k, q) in basis.iter().enumerate().take(m) {
            psi.iter_mut().zip(q).for_each(|(p, x)| *p += y[k] * x);
        }
        normalize(&mut psi);
        apply(&psi, &mut hv);
        let energy_rq = dot(&psi, &hv);
        let res = hv.iter().zip(&psi).map(|(h, p)| (h - energy_rq * p).powi(2)).sum::<f64>().sqrt();
        last_res = res;
        if res <= tol {
            return Ok((psi, energy_rq, res, restart));
        }
        start = psi;
    }
    Err(PhaseError::NoConvergence(last_res))
}

pub fn cluster_ising_ground(spec: &ClusterIsingSpec) -> PhaseResult<GroundResult> {
    spec.validate()?;
    let dim = 1usize << spec.n;
    let (psi, energy, residual, restarts) =
        lanczos_ground(dim, |v, out| apply_cluster_ising(spec, v, out), RESIDUAL_TOL)?;
    let state = StateVector::from_amplitudes(spec.n, psi.into_iter().map(|x| C64::new(x, 0.0)).collect())?;
    Ok(GroundResult { state, energy, residual, restarts })
}
