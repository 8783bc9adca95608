//! Free-fermion chains: hopping and SSH Hamiltonians, ground-state correlation
//! matrices, Givens-rotation compilation, Jordan–Wigner measurement and mitigation.

mod estimate;
mod givens;
mod mcweeny;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::SimError;

pub use estimate::{
    acquire, assemble, estimate_correlation_matrix, jw_observable, measurement_settings, post_select,
    setting_circuit, CorrelationEstimate, EstimateOptions, MeasurementSetting, MitigationFlags,
    ParityMode, SettingData,
};
pub use givens::{
    givens_block_gates, givens_decompose, givens_matrix, givens_to_circuit, network_unitary,
    parity_eigenvalues, prepare_circuit, recompile_parity, GivensNetwork, Rotation,
};
pub use mcweeny::{mcweeny, McWeenyOutcome};

#[derive(Debug, Error)]
pub enum FermionError {
    #[error("site count {0} must be even and at least 2")]
    OddSites(usize),
    #[error("expected {expected} hopping amplitudes, got {got}")]
    HoppingLength { expected: usize, got: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("orbital matrix rows are not orthonormal (error {0:e})")]
    NotOrthonormal(f64),
    #[error("pairs overlap or are not adjacent")]
    BadPairs,
    #[error("index {0} out of range")]
    Index(usize),
    #[error("eigenvalue {0} outside the purification basin (-0.5, 1.5)")]
    Divergence(f64),
    #[error("post-selection discarded every shot")]
    EmptyPostSelection,
    #[error("malformed correlation file: {0}")]
    Format(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type FermionResult<T> = Result<T, FermionError>;

/// Nearest-neighbour hopping amplitudes on an open chain of `n` sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoppingSpec {
    pub n: usize,
    pub x: Vec<f64>,
    pub source: String,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl HoppingSpec {
    pub fn new(x: Vec<f64>) -> FermionResult<Self> {
        let spec = Self { n: x.len() + 1, x, source: "explicit".into(), seed: None };
        spec.validate()?;
        Ok(spec)
    }

    /// `x_i ~ U[0, 2]`.
    pub fn uniform<R: Rng + ?Sized>(n: usize, rng: &mut R, seed: Option<u64>) -> FermionResult<Self> {
        let x = (0..n.saturating_sub(1)).map(|_| rng.gen_range(0.0..2.0)).collect();
        let spec = Self { n, x, source: "uniform[0,2]".into(), seed };
        spec.validate()?;
        Ok(spec)
    }

    /// Alternating intra-cell `v` and inter-cell `w` bonds, starting with `v`.
    pub fn ssh(v: f64, w: f64, n: usize) -> FermionResult<Self> {
        let x = (0..n.saturating_sub(1)).map(|i| if i % 2 == 0 { v } else { w }).collect();
        let spec = Self { n, x, source: format!("ssh({v},{w})"), seed: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> FermionResult<()> {
        if self.n < 2 || !self.n.is_multiple_of(2) {
            return Err(FermionError::OddSites(self.n));
        }
        if self.x.len() != self.n - 1 {
            return Err(FermionError::HoppingLength { expected: self.n - 1, got: self.x.len() });
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(FermionError::Sim(SimError::NonFinite));
        }
        Ok(())
    }
}

pub fn build_hopping(spec: &HoppingSpec) -> FermionResult<DMatrix<f64>> {
    spec.validate()?;
    let mut h = DMatrix::zeros(spec.n, spec.n);
    for (i, &x) in spec.x.iter().enumerate() {
        h[(i, i + 1)] = x;
        h[(i + 1, i)] = x;
    }
    Ok(h)
}

#[derive(Clone, Debug)]
pub struct GroundState {
    /// `C_ij = ⟨a_i† a_j⟩`.
    pub c: DMatrix<f64>,
    /// Occupied orbitals as rows.
    pub q: DMatrix<f64>,
    pub energies: Vec<f64>,
    /// Set when the Fermi level is degenerate within 1e-9.
    pub degenerate: bool,
}

/// Fills the `n_occ` lowest single-particle modes of `h`.
pub fn ground_correlation(h: &DMatrix<f64>, n_occ: usize) -> FermionResult<GroundState> {
    let n = h.nrows();
    if h.ncols() != n || (h - h.transpose()).amax() > 1e-12 {
        return Err(FermionError::NotSymmetric);
    }
    if n_occ > n {
        return Err(FermionError::Index(n_occ));
    }
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let degenerate = n_occ > 0 && n_occ < n && (energies[n_occ] - energies[n_occ - 1]).abs() < 1e-9;
    let mut q = DMatrix::zeros(n_occ, n);
    for (row, &k) in order.iter().take(n_occ).enumerate() {
        let v = eig.eigenvectors.column(k);
        let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            q[(row, j)] = sign * v[j];
        }
    }
    let c = q.transpose() * &q;
    Ok(GroundState { c, q, energies, degenerate })
}

/// Vectorised upper triangle (diagonal included), row by row.
pub fn upper_triangle(c: &DMatrix<f64>) -> Vec<f64> {
    let n = c.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push(c[(i, j)]);
        }
    }
    out
}

pub fn from_upper_triangle(n: usize, v: &[f64]) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            c[(i, j)] = v[k];
            c[(j, i)] = v[k];
            k += 1;
        }
    }
    c
}

pub fn write_correlation_csv(c: &DMatrix<f64>, n_occ: usize, path: &std::path::Path) -> FermionResult<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_path(path).map_err(csv_err)?;
    w.write_record(["n", "n_occ"]).map_err(csv_err)?;
    w.write_record([c.nrows().to_string(), n_occ.to_string()]).map_err(csv_err)?;
    for i in 0..c.nrows() {
        w.write_record((0..c.ncols()).map(|j| format!("{:.17e}", c[(i, j)]))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_correlation_csv(path: &std::path::Path) -> FermionResult<(DMatrix<f64>, usize)> {
    let mut r = csv::ReaderBuilder::new().flexible(true).has_headers(true).from_path(path).map_err(csv_err)?;
    let mut rows = r.records();
    let dims = rows.next().ok_or_else(|| FermionError::Format("missing size row".into()))?.map_err(csv_err)?;
    let parse_usize = |s: &str| s.trim().parse::<usize>().map_err(|e| FermionError::Format(e.to_string()));
    let n = parse_usize(dims.get(0).unwrap_or(""))?;
    let n_occ = parse_usize(dims.get(1).unwrap_or(""))?;
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        let rec = rows.next().ok_or_else(|| FermionError::Format(format!("missing row {i}")))?.map_err(csv_err)?;
        if rec.len() != n {
            return Err(FermionError::Format(format!("row {i} has {} entries", rec.len())));
        }
        for (j, v) in rec.iter().enumerate() {
            c[(i, j)] = v.trim().parse().map_err(|e: std::num::ParseFloatError| FermionError::Format(e.to_string()))?;
        }
    }
    Ok((c, n_occ))
}

fn csv_err(e: csv::Error) -> FermionError {
    FermionError::Format(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn hopping_examples() {
        let h = build_hopping(&HoppingSpec::new(vec![1.0]).unwrap()).unwrap();
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(HoppingSpec::ssh(1.0, 0.0, 4).unwrap().x, vec![1.0, 0.0, 1.0]);
        let h = build_hopping(&HoppingSpec::new(vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        assert_eq!((h[(0, 1)], h[(1, 2)], h[(2, 3)], h[(3, 2)], h[(0, 2)]), (1.0, 2.0, 3.0, 3.0, 0.0));
        assert!(HoppingSpec::new(vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn two_site_ground_correlation() {
        let h = build_hopping(&HoppingSpec::new(vec![1.0]).unwrap()).unwrap();
        let g = ground_correlation(&h, 1).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        assert!((g.c - expected).amax() < 1e-14);
    }

    #[test]
    fn twelve_sites_idempotent_with_half_trace() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let spec = HoppingSpec::uniform(12, &mut rng, None).unwrap();
            let g = ground_correlation(&build_hopping(&spec).unwrap(), 6).unwrap();
            assert!((&g.c * &g.c - &g.c).norm() < 1e-10);
            assert!((g.c.trace() - 6.0).abs() < 1e-10);
            assert!(!g.degenerate);
        }
    }

    #[test]
    fn degenerate_fermi_level_is_flagged() {
        // two decoupled dimers: levels -1,-1,1,1 with one particle sits in a degenerate pair
        let h = build_hopping(&HoppingSpec::new(vec![1.0, 0.0, 1.0]).unwrap()).unwrap();
        assert!(ground_correlation(&h, 1).unwrap().degenerate);
        assert!(!ground_correlation(&h, 2).unwrap().degenerate);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let h = build_hopping(&HoppingSpec::new(vec![0.3, 1.7, 0.9]).unwrap()).unwrap();
        let g = ground_correlation(&h, 2).unwrap();
        write_correlation_csv(&g.c, 2, &path).unwrap();
        let (c, n_occ) = read_correlation_csv(&path).unwrap();
        assert_eq!(n_occ, 2);
        assert_eq!(c, g.c);
    }

    #[test]
    fn upper_triangle_round_trip() {
        let c = DMatrix::from_fn(4, 4, |i, j| (i + j) as f64 + 0.5 * (i * j) as f64);
        assert_eq!(from_upper_triangle(4, &upper_triangle(&c)), c);
        assert_eq!(upper_triangle(&c).len(), 10);
    }
}

#[cfg(test)]
mod oracles;
