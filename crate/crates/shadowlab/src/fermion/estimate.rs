use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::givens::{check_pairs, givens_block_gates, givens_decompose, prepare_circuit, rotate_orbitals};
use super::mcweeny::mcweeny;
use super::{build_hopping, ground_correlation, FermionError, FermionResult, HoppingSpec};
use crate::sim::{run_circuit, sample_noisy_counts, Circuit, Histogram, NoiseModel, Pauli, PauliString, StateVector};

/// `⟨a_i† a_j⟩` (real part for `i < j`) as a sum of Pauli strings.
pub fn jw_observable(i: usize, j: usize, n: usize) -> FermionResult<Vec<PauliString>> {
    if j >= n {
        return Err(FermionError::Index(j));
    }
    if i > j {
        return Err(FermionError::Index(i));
    }
    if i == j {
        return Ok(vec![
            PauliString::identity(n).with_coeff(0.5),
            PauliString::from_sparse(n, &[(i, Pauli::Z)], -0.5)?,
        ]);
    }
    let string = |p: Pauli| {
        let mut terms = vec![(i, p)];
        terms.extend((i + 1..j).map(|k| (k, Pauli::Z)));
        terms.push((j, p));
        PauliString::from_sparse(n, &terms, 0.25)
    };
    Ok(vec![string(Pauli::X)?, string(Pauli::Y)?])
}

/// Keeps outcomes of Hamming weight `n_occ`; returns the filtered counts and the retained fraction.
pub fn post_select(hist: &Histogram, n_occ: usize) -> FermionResult<(Histogram, f64)> {
    let mut out = Histogram::new(hist.n_bits);
    for (&k, &v) in &hist.counts {
        if k.count_ones() as usize == n_occ {
            out.add(k, v);
        }
    }
    let kept = out.total();
    if kept == 0 {
        return Err(FermionError::EmptyPostSelection);
    }
    Ok((out, kept as f64 / hist.total() as f64))
}

/// Mode layout for one measurement circuit: position `p` holds mode `perm[p]`, and each
/// entry of `pairs` is a position `p` whose pair `(p, p + 1)` is read in the hopping basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub perm: Vec<usize>,
    pub pairs: Vec<usize>,
}

impl MeasurementSetting {
    pub fn diagonal(n: usize) -> Self {
        Self { perm: (0..n).collect(), pairs: Vec::new() }
    }

    pub fn is_diagonal(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// One computational-basis setting plus `n − 1` round-robin matchings covering every pair once.
pub fn measurement_settings(n: usize) -> FermionResult<Vec<MeasurementSetting>> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(FermionError::OddSites(n));
    }
    let mut out = vec![MeasurementSetting::diagonal(n)];
    let m = n - 1;
    for r in 0..m {
        let mut matching = vec![(r, m)];
        for k in 1..n / 2 {
            matching.push(((r + k) % m, (r + m - k) % m));
        }
        let mut perm = Vec::with_capacity(n);
        let mut pairs = Vec::with_capacity(n / 2);
        for (a, b) in matching {
            let (a, b) = (a.min(b), a.max(b));
            pairs.push(perm.len());
            perm.push(a);
            perm.push(b);
        }
        out.push(MeasurementSetting { perm, pairs });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParityMode {
    /// Hopping-basis rotations absorbed into the Givens network.
    Recompiled,
    /// Network followed by a separate layer of basis-change blocks.
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MitigationFlags {
    pub post_select: bool,
    pub mcweeny: bool,
    pub recompile: bool,
}

impl MitigationFlags {
    pub fn all() -> Self {
        Self { post_select: true, mcweeny: true, recompile: true }
    }

    pub fn none() -> Self {
        Self { post_select: false, mcweeny: false, recompile: false }
    }

    pub fn parity_mode(&self) -> ParityMode {
        if self.recompile {
            ParityMode::Recompiled
        } else {
            ParityMode::Explicit
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub shots: u64,
    /// Noise realisations sharing the shot budget of each setting.
    pub trajectories: usize,
    /// Use exact Born probabilities instead of finite shots (noise ignored).
    pub exact: bool,
    pub flags: MitigationFlags,
    pub mcweeny_max_iter: usize,
    pub mcweeny_tol: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            shots: 20_000,
            trajectories: 100,
            exact: false,
            flags: MitigationFlags::all(),
            mcweeny_max_iter: 100,
            mcweeny_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorrelationEstimate {
    pub c: DMatrix<f64>,
    /// Retained fraction per setting (1 when post-selection is off).
    pub retention: Vec<f64>,
    pub mcweeny_iterations: Option<usize>,
    pub mcweeny_converged: Option<bool>,
}

/// Measurement circuit for one setting, starting from `|0…0⟩`.
pub fn setting_circuit(q: &DMatrix<f64>, setting: &MeasurementSetting, mode: ParityMode) -> FermionResult<Circuit> {
    let n = q.ncols();
    check_pairs(n, &setting.pairs)?;
    let mut qp = DMatrix::zeros(q.nrows(), n);
    for (pos, &mode_idx) in setting.perm.iter().enumerate() {
        qp.set_column(pos, &q.column(mode_idx));
    }
    let quarter = std::f64::consts::FRAC_PI_4;
    if mode == ParityMode::Recompiled {
        for &p in &setting.pairs {
            rotate_orbitals(&mut qp, p, -quarter);
        }
    }
    let mut circuit = prepare_circuit(&givens_decompose(&qp)?);
    if mode == ParityMode::Explicit {
        for &p in &setting.pairs {
            circuit.extend_gates(givens_block_gates(p, -quarter));
        }
    }
    Ok(circuit)
}

/// Raw data for one setting: outcome weights, normalised or not.
#[derive(Clone, Debug)]
pub struct SettingData {
    pub setting: MeasurementSetting,
    pub counts: Histogram,
    /// Exact Born probabilities, when available instead of counts.
    pub probs: Option<Vec<f64>>,
}

/// Simulates every measurement setting for the ground state of `spec`.
pub fn acquire<R: Rng + ?Sized>(
    spec: &HoppingSpec,
    opts: &EstimateOptions,
    noise: &NoiseModel,
    rng: &mut R,
) -> FermionResult<Vec<SettingData>> {
    let h = build_hopping(spec)?;
    let gs = ground_correlation(&h, spec.n / 2)?;
    let zero = StateVector::zero(spec.n)?;
    let mode = opts.flags.parity_mode();
    measurement_settings(spec.n)?
        .into_iter()
        .map(|setting| {
            let circuit = setting_circuit(&gs.q, &setting, mode)?;
            if opts.exact {
                let (state, _) = run_circuit(&zero, &circuit, &NoiseModel::noiseless(), rng)?;
                Ok(SettingData { setting, counts: Histogram::new(spec.n), probs: Some(state.probabilities()) })
            } else {
                let counts = sample_noisy_counts(&zero, &circuit, noise, opts.shots, opts.trajectories, rng)?;
                Ok(SettingData { setting, counts, probs: None })
            }
        })
        .collect()
}

/// Builds `C` from acquired data, applying post-selection and purification per `flags`.
pub fn assemble(
    n: usize,
    data: &[SettingData],
    flags: MitigationFlags,
    max_iter: usize,
    tol: f64,
) -> FermionResult<CorrelationEstimate> {
    let n_occ = n / 2;
    let d = super::parity_eigenvalues();
    let mut c = DMatrix::zeros(n, n);
    let mut retention = Vec::with_capacity(data.len());
    for sd in data {
        let weights: Vec<(u64, f64)> = match &sd.probs {
            Some(p) => {
                let keep = |k: usize| !flags.post_select || k.count_ones() as usize == n_occ;
                let kept: f64 = p.iter().enumerate().filter(|(k, _)| keep(*k)).map(|(_, v)| v).sum();
                if kept <= 0.0 {
                    return Err(FermionError::EmptyPostSelection);
                }
                retention.push(kept);
                p.iter()
                    .enumerate()
                    .filter(|(k, v)| keep(*k) && **v > 0.0)
                    .map(|(k, v)| (k as u64, v / kept))
                    .collect()
            }
            None => {
                let hist = if flags.post_select {
                    let (h, r) = post_select(&sd.counts, n_occ)?;
                    retention.push(r);
                    h
                } else {
                    retention.push(1.0);
                    sd.counts.clone()
                };
                let total = hist.total() as f64;
                hist.counts.iter().map(|(&k, &v)| (k, v as f64 / total)).collect()
            }
        };
        if sd.setting.is_diagonal() {
            for (k, w) in &weights {
                for pos in 0..n {
                    if k >> pos & 1 == 1 {
                        c[(sd.setting.perm[pos], sd.setting.perm[pos])] += w;
                    }
                }
            }
        } else {
            for &p in &sd.setting.pairs {
                let value: f64 = weights.iter().map(|(k, w)| w * d[((k >> p) & 3) as usize]).sum();
                let (a, b) = (sd.setting.perm[p], sd.setting.perm[p + 1]);
                c[(a, b)] = value;
                c[(b, a)] = value;
            }
        }
    }
    let mut est = CorrelationEstimate { c, retention, mcweeny_iterations: None, mcweeny_converged: None };
    if flags.mcweeny {
        let out = mcweeny(&est.c, max_iter, tol)?;
        est.c = out.c;
        est.mcweeny_iterations = Some(out.iterations);
        est.mcweeny_converged = Some(out.converged);
    }
    Ok(est)
}

/// Simulated experimental correlation matrix of the half-filled ground state of `spec`.
pub fn estimate_correlation_matrix<R: Rng + ?Sized>(
    spec: &HoppingSpec,
    opts: &EstimateOptions,
    noise: &NoiseModel,
    rng: &mut R,
) -> FermionResult<CorrelationEstimate> {
    let data = acquire(spec, opts, noise, rng)?;
    assemble(spec.n, &data, opts.flags, opts.mcweeny_max_iter, opts.mcweeny_tol)
}
