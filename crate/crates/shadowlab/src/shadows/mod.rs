//! Classical shadows from random single-qubit measurements: acquisition, observable
//! estimation, virtual gates, the shadow kernel and a JSON Lines file format.

mod io;
mod kernel;

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{
    haar_single_qubit, mat, run_circuit, sample_outcome, Circuit, Mat2, NoiseModel, Pauli, PauliString,
    SimError, StateVector,
};

pub use io::{load, save, write_atomic, FORMAT_VERSION};
pub use kernel::{
    cross_gram, gram, gram_prepared, log_shadow_kernel, normalized_gram, shadow_kernel, snapshot_overlap,
    GramMatrix, KernelValue, KernelVariant, PreparedShadows, MAX_EXPONENT,
};

#[derive(Debug, Error)]
pub enum ShadowError {
    #[error("observable is not Hermitian")]
    NotHermitian,
    #[error("observable support {0:?} is invalid")]
    BadSupport(Vec<usize>),
    #[error("shadow sets have different qubit counts")]
    MixedQubitCounts,
    #[error("a shadow set needs at least one record")]
    Empty,
    #[error("off-diagonal kernel of a set with itself needs T >= 2")]
    TooFewRecords,
    #[error("virtual gate must list one unitary per qubit")]
    NotFactorized,
    #[error("malformed shadow file: {0}")]
    Format(String),
    #[error("unsupported shadow file version {0}")]
    Version(u64),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type ShadowResult<T> = Result<T, ShadowError>;

/// One randomized measurement: Euler angles `(θ, φ, λ)` of `U_i` per qubit and outcome bits.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowRecord {
    pub bits: u64,
    pub angles: Vec<[f64; 3]>,
}

impl ShadowRecord {
    pub fn from_unitaries(bits: u64, unitaries: &[Mat2]) -> Self {
        let angles = unitaries
            .iter()
            .map(|u| {
                let (t, p, l) = mat::zyz_angles(u);
                [t, p, l]
            })
            .collect();
        Self { bits, angles }
    }

    pub fn n_qubits(&self) -> usize {
        self.angles.len()
    }

    pub fn bit(&self, q: usize) -> bool {
        self.bits >> q & 1 == 1
    }

    pub fn unitary(&self, q: usize) -> Mat2 {
        let [t, p, l] = self.angles[q];
        mat::u3(t, p, l)
    }

    /// `U_i† |b_i⟩`, the measured basis state pulled back to the lab frame.
    pub fn ket(&self, q: usize) -> [C64; 2] {
        let u = self.unitary(q);
        let b = self.bit(q) as usize;
        [u[b][0].conj(), u[b][1].conj()]
    }

    /// Snapshot `σ_i = 3 U_i†|b_i⟩⟨b_i|U_i − I`.
    pub fn snapshot(&self, q: usize) -> Mat2 {
        let s = self.ket(q);
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] = s[r] * s[c].conj() * 3.0 - if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            }
        }
        m
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShadowMeta {
    pub seed: Option<u64>,
    pub state_desc: String,
    pub noise: NoiseModel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowSet {
    pub n_qubits: usize,
    pub records: Vec<ShadowRecord>,
    pub meta: ShadowMeta,
}

impl ShadowSet {
    pub fn new(n_qubits: usize, records: Vec<ShadowRecord>, meta: ShadowMeta) -> ShadowResult<Self> {
        if records.is_empty() {
            return Err(ShadowError::Empty);
        }
        if records.iter().any(|r| r.n_qubits() != n_qubits) {
            return Err(ShadowError::MixedQubitCounts);
        }
        Ok(Self { n_qubits, records, meta })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn measure_record<R: Rng + ?Sized>(
    state: &StateVector,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<ShadowRecord, SimError> {
    let n = state.n_qubits();
    let us: Vec<Mat2> = (0..n).map(|_| haar_single_qubit(rng)).collect();
    let mut s = state.clone();
    for (q, u) in us.iter().enumerate() {
        s.apply_single(q, u)?;
    }
    let bits = sample_outcome(&s, noise, rng);
    Ok(ShadowRecord::from_unitaries(bits, &us))
}

/// `t` shadow records of a fixed state; only readout and global noise apply.
pub fn acquire<R: Rng + ?Sized>(state: &StateVector, t: usize, noise: &NoiseModel, rng: &mut R) -> ShadowResult<ShadowSet> {
    noise.validate()?;
    let records = (0..t).map(|_| measure_record(state, noise, rng)).collect::<Result<Vec<_>, _>>()?;
    ShadowSet::new(state.n_qubits(), records, ShadowMeta { seed: None, state_desc: String::new(), noise: *noise })
}

/// `t` shadow records where each record re-runs `circuit` on `initial` as an independent
/// noisy trajectory (gate noise, mid-circuit measurements and feedforward included).
pub fn acquire_circuit<R: Rng + ?Sized>(
    initial: &StateVector,
    circuit: &Circuit,
    t: usize,
    noise: &NoiseModel,
    rng: &mut R,
) -> ShadowResult<ShadowSet> {
    noise.validate()?;
    let deterministic = circuit.is_unitary_only() && noise.p_single == 0.0 && noise.p_two == 0.0;
    let shared = if deterministic { Some(run_circuit(initial, circuit, noise, rng)?.0) } else { None };
    let mut records = Vec::with_capacity(t);
    for _ in 0..t {
        let rec = match &shared {
            Some(s) => measure_record(s, noise, rng)?,
            None => {
                let (s, _) = run_circuit(initial, circuit, noise, rng)?;
                measure_record(&s, noise, rng)?
            }
        };
        records.push(rec);
    }
    ShadowSet::new(initial.n_qubits(), records, ShadowMeta { seed: None, state_desc: String::new(), noise: *noise })
}

/// Observable on a few qubits: a Pauli string or a dense Hermitian matrix on `support`
/// (local index bit `k` = qubit `support[k]`).
#[derive(Clone, Debug)]
pub enum LocalObservable {
    Pauli(PauliString),
    Dense { support: Vec<usize>, matrix: Vec<Vec<C64>> },
}

impl LocalObservable {
    pub fn dense(support: Vec<usize>, matrix: Vec<Vec<C64>>) -> ShadowResult<Self> {
        let d = 1usize << support.len();
        if support.is_empty() || support.len() > 4 {
            return Err(ShadowError::BadSupport(support));
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != support.len() {
            return Err(ShadowError::BadSupport(support));
        }
        if matrix.len() != d || matrix.iter().any(|row| row.len() != d) {
            return Err(ShadowError::Format(format!("dense observable must be {d}x{d}")));
        }
        for r in 0..d {
            for c in 0..d {
                if (matrix[r][c] - matrix[c][r].conj()).norm() > 1e-10 {
                    return Err(ShadowError::NotHermitian);
                }
            }
        }
        Ok(LocalObservable::Dense { support, matrix })
    }

    pub fn support(&self) -> Vec<usize> {
        match self {
            LocalObservable::Pauli(p) => p.support(),
            LocalObservable::Dense { support, .. } => support.clone(),
        }
    }

    pub fn locality(&self) -> usize {
        self.support().len()
    }

    /// Spectral norm `‖O‖∞`.
    pub fn operator_norm(&self) -> f64 {
        match self {
            LocalObservable::Pauli(p) => p.coeff().abs(),
            LocalObservable::Dense { matrix, .. } => {
                // real symmetric embedding [[Re, −Im], [Im, Re]] has the same spectrum, doubled
                let d = matrix.len();
                let big = nalgebra::DMatrix::from_fn(2 * d, 2 * d, |r, c| {
                    let z = matrix[r % d][c % d];
                    match (r < d, c < d) {
                        (true, true) | (false, false) => z.re,
                        (true, false) => -z.im,
                        (false, true) => z.im,
                    }
                });
                nalgebra::SymmetricEigen::new(big).eigenvalues.amax()
            }
        }
    }

    fn validate(&self, n: usize) -> ShadowResult<()> {
        let support = self.support();
        if support.iter().any(|&q| q >= n) {
            return Err(ShadowError::BadSupport(support));
        }
        if let LocalObservable::Pauli(p) = self {
            if p.n_qubits() != n {
                return Err(ShadowError::BadSupport(support));
            }
        }
        Ok(())
    }

    /// Single-record estimate `Tr(O ⊗_i σ_i)`.
    pub fn single_shot(&self, rec: &ShadowRecord) -> f64 {
        match self {
            LocalObservable::Pauli(p) => {
                let mut v = p.coeff();
                for (q, &l) in p.letters().iter().enumerate() {
                    if l == Pauli::I {
                        continue;
                    }
                    let s = rec.ket(q);
                    let pm = l.matrix();
                    let mut e = C64::new(0.0, 0.0);
                    for r in 0..2 {
                        for c in 0..2 {
                            e += s[r].conj() * pm[r][c] * s[c];
                        }
                    }
                    v *= 3.0 * e.re;
                }
                v
            }
            LocalObservable::Dense { support, matrix } => {
                let snaps: Vec<Mat2> = support.iter().map(|&q| rec.snapshot(q)).collect();
                let d = matrix.len();
                let mut tr = C64::new(0.0, 0.0);
                for a in 0..d {
                    for b in 0..d {
                        // (⊗σ)_{ba}
                        let mut prod = C64::new(1.0, 0.0);
                        for (k, s) in snaps.iter().enumerate() {
                            prod *= s[b >> k & 1][a >> k & 1];
                        }
                        tr += matrix[a][b] * prod;
                    }
                }
                tr.re
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    /// Unbiased sample variance of the single-record estimates.
    pub variance: f64,
}

/// Empirical mean of single-record estimates with its standard error.
pub fn estimate(set: &ShadowSet, obs: &LocalObservable) -> ShadowResult<Estimate> {
    obs.validate(set.n_qubits)?;
    let values: Vec<f64> = set.records.iter().map(|r| obs.single_shot(r)).collect();
    let t = values.len() as f64;
    let mean = values.iter().sum::<f64>() / t;
    let variance = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0) } else { 0.0 };
    Ok(Estimate { mean, stderr: (variance / t).sqrt(), variance })
}

/// Median of `k` batch means; opt-in robust alternative to [`estimate`].
pub fn estimate_median_of_means(set: &ShadowSet, obs: &LocalObservable, k: usize) -> ShadowResult<f64> {
    obs.validate(set.n_qubits)?;
    let k = k.clamp(1, set.len());
    let batch = set.len() / k;
    let mut means: Vec<f64> = (0..k)
        .map(|j| set.records[j * batch..(j + 1) * batch].iter().map(|r| obs.single_shot(r)).sum::<f64>() / batch as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    Ok(if k % 2 == 1 { means[k / 2] } else { 0.5 * (means[k / 2 - 1] + means[k / 2]) })
}

/// Replaces every stored `U_i` by `U_i V_i†`, so the shadow describes `VρV†`.
pub fn virtual_unitary(set: &ShadowSet, v: &[Mat2]) -> ShadowResult<ShadowSet> {
    if v.len() != set.n_qubits {
        return Err(ShadowError::NotFactorized);
    }
    if v.iter().any(|m| mat::unitarity_error2(m) > 1e-10) {
        return Err(ShadowError::Sim(SimError::NonUnitary));
    }
    let vd: Vec<Mat2> = v.iter().map(mat::dagger2).collect();
    let records = set
        .records
        .iter()
        .map(|r| {
            let us: Vec<Mat2> = (0..set.n_qubits).map(|q| mat::matmul2(&r.unitary(q), &vd[q])).collect();
            ShadowRecord::from_unitaries(r.bits, &us)
        })
        .collect();
    let mut meta = set.meta.clone();
    meta.state_desc = format!("virtual({})", meta.state_desc);
    ShadowSet::new(set.n_qubits, records, meta)
}

#[cfg(test)]
mod tests;
