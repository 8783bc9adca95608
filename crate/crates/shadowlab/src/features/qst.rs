//! Pauli-basis tomography of a few qubits and the eigenvalue-projection estimator.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mem::{mitigate, project_to_simplex, ResponseMatrix};
use super::{DensityMatrix, FeatureError, FeatureResult};
use crate::sim::run::corrupt;
use crate::sim::{mat, Mat2, NoiseModel, Pauli};

/// Outcome frequencies of one product basis; local bit `j` reads qubit `j` of the subsystem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingFrequencies {
    pub bases: Vec<Pauli>,
    pub freqs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyData {
    pub k: usize,
    /// 0 marks exact probabilities.
    pub shots: u64,
    pub settings: Vec<SettingFrequencies>,
}

/// All `3^k` settings, first qubit fastest.
pub fn all_settings(k: usize) -> Vec<Vec<Pauli>> {
    let letters = [Pauli::X, Pauli::Y, Pauli::Z];
    (0..3usize.pow(k as u32))
        .map(|mut m| {
            (0..k)
                .map(|_| {
                    let l = letters[m % 3];
                    m /= 3;
                    l
                })
                .collect()
        })
        .collect()
}

/// Rotation taking the `p` eigenbasis to the computational basis.
fn basis_change(p: Pauli) -> Mat2 {
    let sdg = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(0.0, -1.0)]];
    match p {
        Pauli::X => mat::hadamard(),
        Pauli::Y => mat::matmul2(&mat::hadamard(), &sdg),
        _ => mat::identity2(),
    }
}

fn kron_all(ms: &[Mat2]) -> DMatrix<C64> {
    // local qubit j is bit j, so the last factor is the most significant
    let mut out = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for m in ms {
        let m = DMatrix::from_fn(2, 2, |r, c| m[r][c]);
        out = m.kronecker(&out);
    }
    out
}

/// Outcome probabilities of `rho` in the product basis `bases`.
pub fn setting_probabilities(rho: &DensityMatrix, bases: &[Pauli]) -> Vec<f64> {
    let v = kron_all(&bases.iter().map(|&p| basis_change(p)).collect::<Vec<_>>());
    let rotated = &v * rho * v.adjoint();
    rotated.diagonal().iter().map(|z| z.re.max(0.0)).collect()
}

/// Simulated tomography; `shots = 0` keeps exact probabilities and ignores noise.
pub fn measure_tomography<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    shots: u64,
    noise: &NoiseModel,
    rng: &mut R,
) -> FeatureResult<TomographyData> {
    let dim = rho.nrows();
    let k = dim.trailing_zeros() as usize;
    noise.validate()?;
    let settings = all_settings(k)
        .into_iter()
        .map(|bases| {
            let probs = setting_probabilities(rho, &bases);
            let freqs = if shots == 0 {
                probs
            } else {
                let total: f64 = probs.iter().sum();
                let mut cdf = Vec::with_capacity(dim);
                let mut acc = 0.0;
                for p in &probs {
                    acc += p / total;
                    cdf.push(acc);
                }
                let mut counts = vec![0u64; dim];
                for _ in 0..shots {
                    let u: f64 = rng.gen();
                    let o = cdf.partition_point(|&c| c <= u).min(dim - 1);
                    counts[corrupt(o as u64, k, noise, &mut &mut *rng) as usize] += 1;
                }
                counts.into_iter().map(|c| c as f64 / shots as f64).collect()
            };
            SettingFrequencies { bases, freqs }
        })
        .collect();
    Ok(TomographyData { k, shots, settings })
}

impl TomographyData {
    /// Same data with every setting passed through `R⁻¹`.
    pub fn mitigated(&self, resp: &ResponseMatrix) -> FeatureResult<TomographyData> {
        if resp.k != self.k {
            return Err(FeatureError::Dim { expected: self.k, got: resp.k });
        }
        let settings = self
            .settings
            .iter()
            .map(|s| Ok(SettingFrequencies { bases: s.bases.clone(), freqs: mitigate(resp, &s.freqs)? }))
            .collect::<FeatureResult<Vec<_>>>()?;
        Ok(TomographyData { k: self.k, shots: self.shots, settings })
    }
}

/// `ρ = 2^{-k} Σ_P ⟨P⟩ P`, each `⟨P⟩` averaged over every setting that measures it.
pub fn linear_inversion(data: &TomographyData) -> FeatureResult<DensityMatrix> {
    let k = data.k;
    let dim = 1usize << k;
    let mut rho = DMatrix::zeros(dim, dim);
    for code in 0..4usize.pow(k as u32) {
        let letters: Vec<Pauli> = (0..k).map(|j| Pauli::from_index(code >> (2 * j) & 3)).collect();
        let mut sum = 0.0;
        let mut hits = 0usize;
        for s in &data.settings {
            if letters.iter().zip(&s.bases).all(|(l, b)| *l == Pauli::I || l == b) {
                let mask = letters.iter().enumerate().filter(|(_, l)| **l != Pauli::I).fold(0usize, |m, (j, _)| m | 1 << j);
                sum += s
                    .freqs
                    .iter()
                    .enumerate()
                    .map(|(o, f)| if (o & mask).count_ones() % 2 == 0 { *f } else { -*f })
                    .sum::<f64>();
                hits += 1;
            }
        }
        if hits == 0 {
            return Err(FeatureError::Incomplete(letters.iter().map(|l| l.to_char()).collect()));
        }
        let p = kron_all(&letters.iter().map(|l| l.matrix()).collect::<Vec<_>>());
        rho += p * C64::new(sum / hits as f64 / dim as f64, 0.0);
    }
    Ok(rho)
}

/// Closest physical state in Frobenius norm: keep the eigenvectors and project the
/// spectrum onto the probability simplex.
pub fn project_physical(rho: &DensityMatrix) -> DensityMatrix {
    let herm = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let lam = project_to_simplex(eig.eigenvalues.as_slice());
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(lam.len(), lam.iter().map(|&x| C64::new(x, 0.0))));
    v * d * v.adjoint()
}

pub fn mle_qst(data: &TomographyData) -> FeatureResult<DensityMatrix> {
    Ok(project_physical(&linear_inversion(data)?))
}
