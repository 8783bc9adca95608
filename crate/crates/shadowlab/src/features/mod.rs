//! Entropy features of a four-qubit window: readout mitigation, tomography, Renyi-2
//! feature vectors and linear phase classifiers.

mod mem;
mod qst;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ml::{svm_fit, KernelRegistry, KernelSpec, MlError};
use crate::phases::{grid_edges, local_random_circuit, prepare_logical_zero, PhaseError, PrepMode, SurfaceCodeLayout};
use crate::rng::stream;
use crate::sim::{run_circuit, NoiseModel, SimError, StateVector};

pub use mem::{calibrate_response, mitigate, project_to_simplex, ResponseMatrix};
pub use qst::{
    all_settings, linear_inversion, measure_tomography, mle_qst, project_physical, setting_probabilities,
    SettingFrequencies, TomographyData,
};

pub type DensityMatrix = DMatrix<C64>;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dim { expected: usize, got: usize },
    #[error("response matrix is singular")]
    Singular,
    #[error("calibration needs at least one shot")]
    ZeroShots,
    #[error("no setting measures {0}")]
    Incomplete(String),
    #[error("purity {0} exceeds 1")]
    Unphysical(f64),
    #[error("subsystem qubits must be distinct and inside the register")]
    BadSubsystem,
    #[error("training labels must contain both classes")]
    SingleClass,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ml(#[from] MlError),
    #[error(transparent)]
    Phase(#[from] PhaseError),
}

pub type FeatureResult<T> = Result<T, FeatureError>;

pub const N_FEATURES: usize = 15;

/// Subsets of the four-qubit window, by window position, in feature order.
pub const SUBSETS: [&[usize]; N_FEATURES] = [
    &[0],
    &[1],
    &[2],
    &[3],
    &[0, 1],
    &[0, 2],
    &[0, 3],
    &[1, 2],
    &[1, 3],
    &[2, 3],
    &[0, 1, 2],
    &[0, 1, 3],
    &[0, 2, 3],
    &[1, 2, 3],
    &[0, 1, 2, 3],
];

/// Window `[1, 2, 5, 6]` of the 3×3 patch, read 1-indexed in row-major order.
pub const DEFAULT_WINDOW: [usize; 4] = [0, 1, 4, 5];

pub type FeatureVector = [f64; N_FEATURES];

/// `ρ_A` of `state` on `qubits`, local bit `j` = `qubits[j]`.
pub fn reduced_density_matrix(state: &StateVector, qubits: &[usize]) -> FeatureResult<DensityMatrix> {
    let n = state.n_qubits();
    if qubits.iter().any(|&q| q >= n) || (1..qubits.len()).any(|i| qubits[..i].contains(&qubits[i])) {
        return Err(FeatureError::BadSubsystem);
    }
    let k = qubits.len();
    let env: Vec<usize> = (0..n).filter(|q| !qubits.contains(q)).collect();
    let mut m = DMatrix::zeros(1 << k, 1 << env.len());
    for (b, a) in state.amplitudes().iter().enumerate() {
        let local = qubits.iter().enumerate().fold(0, |acc, (j, &q)| acc | (b >> q & 1) << j);
        let rest = env.iter().enumerate().fold(0, |acc, (j, &q)| acc | (b >> q & 1) << j);
        m[(local, rest)] = *a;
    }
    Ok(&m * m.adjoint())
}

/// Traces out every local qubit of `rho` not listed in `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> DensityMatrix {
    let k = rho.nrows().trailing_zeros() as usize;
    let env: Vec<usize> = (0..k).filter(|q| !keep.contains(q)).collect();
    let embed = |local: usize, e: usize| {
        let a = keep.iter().enumerate().fold(0, |acc, (j, &q)| acc | (local >> j & 1) << q);
        env.iter().enumerate().fold(a, |acc, (j, &q)| acc | (e >> j & 1) << q)
    };
    let dk = 1usize << keep.len();
    DMatrix::from_fn(dk, dk, |i, j| (0..1usize << env.len()).map(|e| rho[(embed(i, e), embed(j, e))]).sum())
}

/// `−log₂ Tr ρ²`.
pub fn renyi2(rho: &DensityMatrix) -> FeatureResult<f64> {
    let purity: f64 = rho.iter().map(|z| z.norm_sqr()).sum();
    if purity > 1.0 + 1e-9 {
        return Err(FeatureError::Unphysical(purity));
    }
    Ok((-purity.log2()).max(0.0))
}

/// Feature vector of a four-qubit density matrix.
pub fn features_from_rdm(rho: &DensityMatrix) -> FeatureResult<FeatureVector> {
    if rho.nrows() != 16 {
        return Err(FeatureError::Dim { expected: 16, got: rho.nrows() });
    }
    let mut phi = [0.0; N_FEATURES];
    for (f, subset) in phi.iter_mut().zip(SUBSETS) {
        *f = renyi2(&partial_trace(rho, subset))?;
    }
    Ok(phi)
}

pub fn feature_map_exact(state: &StateVector, window: &[usize; 4]) -> FeatureResult<FeatureVector> {
    features_from_rdm(&reduced_density_matrix(state, window)?)
}

/// Features from tomography of the window, optionally passed through readout mitigation.
pub fn feature_map_measured<R: Rng + ?Sized>(
    state: &StateVector,
    window: &[usize; 4],
    shots: u64,
    noise: &NoiseModel,
    response: Option<&ResponseMatrix>,
    rng: &mut R,
) -> FeatureResult<FeatureVector> {
    let data = measure_tomography(&reduced_density_matrix(state, window)?, shots, noise, rng)?;
    let data = match response {
        Some(r) => data.mitigated(r)?,
        None => data,
    };
    features_from_rdm(&mle_qst(&data)?)
}

/// Raw and mitigated features computed from one shared tomography record.
pub fn feature_pair_measured<R: Rng + ?Sized>(
    state: &StateVector,
    window: &[usize; 4],
    shots: u64,
    noise: &NoiseModel,
    response: &ResponseMatrix,
    rng: &mut R,
) -> FeatureResult<(FeatureVector, FeatureVector)> {
    let data = measure_tomography(&reduced_density_matrix(state, window)?, shots, noise, rng)?;
    let raw = features_from_rdm(&mle_qst(&data)?)?;
    let mem = features_from_rdm(&mle_qst(&data.mitigated(response)?)?)?;
    Ok((raw, mem))
}

/// `f(φ) = w·φ + w₀`; positive values mean topological.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub w: Vec<f64>,
    pub w0: f64,
}

/// Kitaev-Preskill combination `S_A + S_B + S_C − S_AB − S_AC − S_BC + S_ABC` with
/// `A = {1}`, `B = {6}`, `C = {2, 5}`.
pub const TEE_WEIGHTS: [f64; N_FEATURES] = [1., 0., 0., 1., 0., 0., -1., 1., 0., 0., -1., 0., 0., -1., 1.];
pub const TEE_OFFSET: f64 = 0.1;

/// Weights of a hardware-trained model, kept as a reference pattern only.
pub const REFERENCE_ML_WEIGHTS: [f64; N_FEATURES] =
    [0.0780, 0.0736, 0.0232, 0.0342, 0.230, 0.103, 0.113, 0.0786, 0.0977, 0.091, 0.235, 0.254, 0.172, 0.0152, 0.171];
pub const REFERENCE_ML_OFFSET: f64 = -2.23;

impl LinearClassifier {
    /// Negated `TEE·φ + 0.1`, since a topological state has negative TEE.
    pub fn tee() -> Self {
        Self { w: TEE_WEIGHTS.iter().map(|w| -w).collect(), w0: -TEE_OFFSET }
    }

    pub fn decision(&self, phi: &[f64]) -> f64 {
        self.w.iter().zip(phi).map(|(w, x)| w * x).sum::<f64>() + self.w0
    }

    pub fn predict(&self, phi: &[f64]) -> f64 {
        if self.decision(phi) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn error_rate(&self, features: &[FeatureVector], labels: &[f64]) -> f64 {
        let wrong = features.iter().zip(labels).filter(|(x, &y)| self.predict(&x[..]) != y).count();
        wrong as f64 / features.len().max(1) as f64
    }
}

/// Linear soft-margin SVM; returns the classifier and its training accuracy.
pub fn fit_linear_classifier(features: &[FeatureVector], labels: &[f64], c: f64) -> FeatureResult<(LinearClassifier, f64)> {
    if !(labels.iter().any(|&y| y > 0.0) && labels.iter().any(|&y| y < 0.0)) {
        return Err(FeatureError::SingleClass);
    }
    let points: Vec<Vec<f64>> = features.iter().map(|x| x.to_vec()).collect();
    let model = svm_fit(&KernelRegistry::default(), &KernelSpec::linear(), &points, labels, c)?;
    let w = model.linear_weights().expect("linear kernel");
    let clf = LinearClassifier { w, w0: -model.rho };
    let acc = 1.0 - clf.error_rate(features, labels);
    Ok((clf, acc))
}

/// Adds independent `U[−ε, ε]` noise to every entry.
pub fn perturb<R: Rng + ?Sized>(phi: &FeatureVector, eps: f64, rng: &mut R) -> FeatureVector {
    let mut out = *phi;
    if eps > 0.0 {
        out.iter_mut().for_each(|x| *x += rng.gen_range(-eps..=eps));
    }
    out
}

/// Label `+1`: `|0_L⟩` of the `d = 3` patch, `−1`: `|0⟩^9`; both followed by
/// `d_lu` local random layers on the grid.
pub fn extraction_state<R: Rng + ?Sized>(
    topological: bool,
    logical_zero: &StateVector,
    d_lu: usize,
    rng: &mut R,
) -> FeatureResult<StateVector> {
    let n = logical_zero.n_qubits();
    let side = (n as f64).sqrt().round() as usize;
    let c = local_random_circuit(n, &grid_edges(side, side), d_lu, rng)?;
    let start = if topological { logical_zero.clone() } else { StateVector::zero(n)? };
    Ok(run_circuit(&start, &c, &NoiseModel::noiseless(), rng)?.0)
}

pub fn logical_zero_d3() -> FeatureResult<StateVector> {
    let layout = SurfaceCodeLayout::new(3)?;
    Ok(prepare_logical_zero(&layout, PrepMode::Projector, &mut rand::rngs::mock::StepRng::new(0, 0))?)
}

/// Per-instance error rates of each classifier: every instance draws `per_class`
/// fresh states per phase and fresh `U[−ε, ε]` feature noise.
pub fn evaluate_classifiers(
    classifiers: &[LinearClassifier],
    instances: usize,
    per_class: usize,
    d_lu: usize,
    eps: f64,
    window: &[usize; 4],
    seed: u64,
) -> FeatureResult<Vec<Vec<f64>>> {
    let l0 = logical_zero_d3()?;
    let per_instance = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, "evaluate", i as u64);
            let mut feats = Vec::with_capacity(2 * per_class);
            let mut labels = Vec::with_capacity(2 * per_class);
            for topo in [true, false] {
                for _ in 0..per_class {
                    let s = extraction_state(topo, &l0, d_lu, &mut rng)?;
                    feats.push(perturb(&feature_map_exact(&s, window)?, eps, &mut rng));
                    labels.push(if topo { 1.0 } else { -1.0 });
                }
            }
            Ok(classifiers.iter().map(|c| c.error_rate(&feats, &labels)).collect::<Vec<f64>>())
        })
        .collect::<FeatureResult<Vec<_>>>()?;
    Ok((0..classifiers.len()).map(|c| per_instance.iter().map(|r| r[c]).collect()).collect())
}

#[cfg(test)]
mod tests;
