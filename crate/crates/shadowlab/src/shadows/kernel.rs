use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ShadowError, ShadowRecord, ShadowResult, ShadowSet};

/// Largest exponent passed to `exp` before the kernel value is clamped.
pub const MAX_EXPONENT: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelVariant {
    /// Average over all `T²` record pairs.
    Full,
    /// Average over record pairs with `t ≠ t′`.
    OffDiagonal,
}

/// `Tr(σ_i σ̃_i) = 9 |⟨b_i|U_i Ũ_i†|b̃_i⟩|² − 4` for qubit `q`.
pub fn snapshot_overlap(a: &ShadowRecord, b: &ShadowRecord, q: usize) -> f64 {
    let (s, t) = (a.ket(q), b.ket(q));
    let z = s[0].conj() * t[0] + s[1].conj() * t[1];
    9.0 * z.norm_sqr() - 4.0
}

/// Snapshot kets of a shadow set, laid out as `[re0, im0, re1, im1]` per record and qubit.
#[derive(Clone, Debug)]
pub struct PreparedShadows {
    pub n_qubits: usize,
    pub n_records: usize,
    kets: Vec<[f64; 4]>,
}

impl PreparedShadows {
    pub fn new(set: &ShadowSet) -> Self {
        let mut kets = Vec::with_capacity(set.len() * set.n_qubits);
        for r in &set.records {
            for q in 0..set.n_qubits {
                let s = r.ket(q);
                kets.push([s[0].re, s[0].im, s[1].re, s[1].im]);
            }
        }
        Self { n_qubits: set.n_qubits, n_records: set.len(), kets }
    }

    fn record(&self, t: usize) -> &[[f64; 4]] {
        &self.kets[t * self.n_qubits..(t + 1) * self.n_qubits]
    }
}

#[inline]
fn summed_overlap(a: &[[f64; 4]], b: &[[f64; 4]]) -> f64 {
    let mut acc = 0.0;
    for (s, t) in a.iter().zip(b) {
        let re = s[0] * t[0] + s[1] * t[1] + s[2] * t[2] + s[3] * t[3];
        let im = s[0] * t[1] - s[1] * t[0] + s[2] * t[3] - s[3] * t[2];
        acc += re * re + im * im;
    }
    9.0 * acc - 4.0 * a.len() as f64
}

fn canonical_le(a: &PreparedShadows, b: &PreparedShadows) -> bool {
    for (x, y) in a.kets.iter().flatten().zip(b.kets.iter().flatten()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    a.kets.len() <= b.kets.len()
}

/// `log k = τ · mean_{t,t′} exp(γ/n · Σ_i Tr(σ_i^(t) σ̃_i^(t′)))`.
pub fn log_shadow_kernel(
    a: &PreparedShadows,
    b: &PreparedShadows,
    tau: f64,
    gamma: f64,
    variant: KernelVariant,
) -> ShadowResult<f64> {
    if a.n_qubits != b.n_qubits {
        return Err(ShadowError::MixedQubitCounts);
    }
    // fixed argument order keeps k(a, b) and k(b, a) bitwise identical
    let (a, b) = if canonical_le(a, b) { (a, b) } else { (b, a) };
    let scale = gamma / a.n_qubits as f64;
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for t in 0..a.n_records {
        let ra = a.record(t);
        for u in 0..b.n_records {
            if variant == KernelVariant::OffDiagonal && t == u {
                continue;
            }
            sum += (scale * summed_overlap(ra, b.record(u))).exp();
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(ShadowError::TooFewRecords);
    }
    Ok(tau * sum / pairs as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub log: f64,
    pub value: f64,
    /// Set when `log` exceeded [`MAX_EXPONENT`] and `value` was clamped.
    pub clamped: bool,
}

pub fn shadow_kernel(a: &ShadowSet, b: &ShadowSet, tau: f64, gamma: f64, variant: KernelVariant) -> ShadowResult<KernelValue> {
    let log = log_shadow_kernel(&PreparedShadows::new(a), &PreparedShadows::new(b), tau, gamma, variant)?;
    let clamped = log > MAX_EXPONENT;
    Ok(KernelValue { log, value: log.min(MAX_EXPONENT).exp(), clamped })
}

/// Gram matrix held in log space.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub log: DMatrix<f64>,
}

impl GramMatrix {
    /// `K_ij` with exponents clamped at [`MAX_EXPONENT`]; the flag reports any clamp.
    pub fn values(&self) -> (DMatrix<f64>, bool) {
        let clamped = self.log.iter().any(|&l| l > MAX_EXPONENT);
        (self.log.map(|l| l.min(MAX_EXPONENT).exp()), clamped)
    }

    /// `K_ij / √(K_ii K_jj)`, computed from logs so no clamp is needed.
    pub fn normalized(&self) -> DMatrix<f64> {
        let n = self.log.nrows();
        DMatrix::from_fn(n, n, |i, j| (self.log[(i, j)] - 0.5 * (self.log[(i, i)] + self.log[(j, j)])).exp())
    }
}

/// Symmetric Gram matrix over `sets`.
pub fn gram(sets: &[ShadowSet], tau: f64, gamma: f64, variant: KernelVariant) -> ShadowResult<GramMatrix> {
    let prepared: Vec<PreparedShadows> = sets.iter().map(PreparedShadows::new).collect();
    gram_prepared(&prepared, tau, gamma, variant)
}

pub fn gram_prepared(prepared: &[PreparedShadows], tau: f64, gamma: f64, variant: KernelVariant) -> ShadowResult<GramMatrix> {
    if let Some(first) = prepared.first() {
        if prepared.iter().any(|p| p.n_qubits != first.n_qubits) {
            return Err(ShadowError::MixedQubitCounts);
        }
    }
    let m = prepared.len();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| (i..m).map(|j| log_shadow_kernel(&prepared[i], &prepared[j], tau, gamma, variant)).collect())
        .collect::<ShadowResult<Vec<_>>>()?;
    let mut log = DMatrix::zeros(m, m);
    for (i, row) in rows.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            log[(i, i + k)] = v;
            log[(i + k, i)] = v;
        }
    }
    Ok(GramMatrix { log })
}

/// Cross kernel `log k(a_i, b_j)` between two batches.
pub fn cross_gram(a: &[PreparedShadows], b: &[PreparedShadows], tau: f64, gamma: f64, variant: KernelVariant) -> ShadowResult<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = a
        .par_iter()
        .map(|pa| b.iter().map(|pb| log_shadow_kernel(pa, pb, tau, gamma, variant)).collect())
        .collect::<ShadowResult<Vec<_>>>()?;
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| rows[i][j]))
}

/// Normalised Gram matrix of `sets`.
pub fn normalized_gram(sets: &[ShadowSet], tau: f64, gamma: f64, variant: KernelVariant) -> ShadowResult<DMatrix<f64>> {
    Ok(gram(sets, tau, gamma, variant)?.normalized())
}
