use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::circuit::{Circuit, Gate, Op};
use super::noise::NoiseModel;
use super::pauli::Pauli;
use super::state::StateVector;
use super::{SimError, SimResult};

/// Outcome counts keyed by the measured integer (bit `q` = qubit `q`).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Histogram {
    pub n_bits: usize,
    pub counts: BTreeMap<u64, u64>,
}

impl Histogram {
    pub fn new(n_bits: usize) -> Self {
        Self { n_bits, counts: BTreeMap::new() }
    }

    pub fn add(&mut self, outcome: u64, count: u64) {
        if count > 0 {
            *self.counts.entry(outcome).or_insert(0) += count;
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (&k, &v) in &other.counts {
            self.add(k, v);
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn get(&self, outcome: u64) -> u64 {
        self.counts.get(&outcome).copied().unwrap_or(0)
    }

    /// Bitstring label with qubit 0 first.
    pub fn label(&self, outcome: u64) -> String {
        bits_to_string(outcome, self.n_bits)
    }

    pub fn from_labels(n_bits: usize, entries: &[(&str, u64)]) -> SimResult<Self> {
        let mut h = Histogram::new(n_bits);
        for (label, c) in entries {
            h.add(string_to_bits(label, n_bits)?, *c);
        }
        Ok(h)
    }

    /// Empirical distribution as a dense vector of length `2^n_bits`.
    pub fn distribution(&self) -> Vec<f64> {
        let total = self.total().max(1) as f64;
        let mut p = vec![0.0; 1 << self.n_bits];
        for (&k, &v) in &self.counts {
            p[k as usize] = v as f64 / total;
        }
        p
    }
}

pub fn bits_to_string(value: u64, n: usize) -> String {
    (0..n).map(|q| if value >> q & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn string_to_bits(s: &str, n: usize) -> SimResult<u64> {
    if s.len() != n {
        return Err(SimError::BadLabel(s.to_string()));
    }
    let mut v = 0u64;
    for (q, c) in s.chars().enumerate() {
        match c {
            '0' => {}
            '1' => v |= 1 << q,
            _ => return Err(SimError::BadLabel(s.to_string())),
        }
    }
    Ok(v)
}

/// A uniformly random non-identity Pauli on `support`.
fn random_error<R: Rng + ?Sized>(support: &[usize], rng: &mut R) -> Vec<(usize, Pauli)> {
    let k = support.len();
    let code = rng.gen_range(1..(1usize << (2 * k)));
    support.iter().enumerate().map(|(j, &q)| (q, Pauli::from_index(code >> (2 * j) & 3))).collect()
}

fn apply_error(state: &mut StateVector, error: &[(usize, Pauli)]) -> SimResult<()> {
    for &(q, p) in error {
        state.apply_pauli(q, p)?;
    }
    Ok(())
}

fn maybe_gate_error<R: Rng + ?Sized>(
    state: &mut StateVector,
    gate: &Gate,
    noise: &NoiseModel,
    rng: &mut R,
) -> SimResult<()> {
    let support = gate.support();
    let p = noise.gate_error_prob(support.len());
    if p > 0.0 && rng.gen::<f64>() < p {
        apply_error(state, &random_error(&support, rng))?;
    }
    Ok(())
}

/// Runs one noisy trajectory; returns the final state and the recorded classical bits.
pub fn run_circuit<R: Rng + ?Sized>(
    state: &StateVector,
    circuit: &Circuit,
    noise: &NoiseModel,
    rng: &mut R,
) -> SimResult<(StateVector, Vec<bool>)> {
    noise.validate()?;
    circuit.validate()?;
    if circuit.n_qubits() != state.n_qubits() {
        return Err(SimError::LengthMismatch { expected: state.n_qubits(), got: circuit.n_qubits() });
    }
    let mut s = state.clone();
    let mut bits = vec![false; circuit.n_slots()];
    for op in circuit.ops() {
        match op {
            Op::Gate(g) => {
                g.apply(&mut s)?;
                maybe_gate_error(&mut s, g, noise, rng)?;
            }
            Op::Measure { qubit, slot } => {
                let b = s.measure(*qubit, rng)?;
                let p = noise.flip_prob(b);
                bits[*slot] = if p > 0.0 && rng.gen::<f64>() < p { !b } else { b };
            }
            Op::Reset { qubit } => s.reset(*qubit, rng)?,
            Op::Conditional { gate, parity_of } => {
                if parity_of.iter().fold(false, |acc, &k| acc ^ bits[k]) {
                    gate.apply(&mut s)?;
                    maybe_gate_error(&mut s, gate, noise, rng)?;
                }
            }
        }
    }
    Ok((s, bits))
}

/// Noiseless run with every measurement forced to the given outcome.
///
/// Returns the post-measurement state and the probability of the forced record.
/// Resets are deterministic here because they follow a forced measurement of `|0⟩`/`|1⟩`.
pub fn run_circuit_postselected(
    state: &StateVector,
    circuit: &Circuit,
    outcomes: &[bool],
) -> SimResult<(StateVector, f64)> {
    circuit.validate()?;
    if outcomes.len() != circuit.n_slots() {
        return Err(SimError::LengthMismatch { expected: circuit.n_slots(), got: outcomes.len() });
    }
    let mut s = state.clone();
    let mut prob = 1.0;
    for op in circuit.ops() {
        match op {
            Op::Gate(g) => g.apply(&mut s)?,
            Op::Measure { qubit, slot } => prob *= s.project(*qubit, outcomes[*slot])?,
            Op::Reset { qubit } => {
                let p1 = s.prob_one(*qubit)?;
                if p1 > 1e-12 && p1 < 1.0 - 1e-12 {
                    return Err(SimError::NondeterministicReset(*qubit));
                }
                if p1 > 0.5 {
                    s.apply_pauli(*qubit, Pauli::X)?;
                }
            }
            Op::Conditional { gate, parity_of } => {
                if parity_of.iter().fold(false, |acc, &k| acc ^ outcomes[k]) {
                    gate.apply(&mut s)?;
                }
            }
        }
    }
    Ok((s, prob))
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], rng: &mut impl Rng) -> usize {
    let total = *cdf.last().unwrap_or(&1.0);
    let u = rng.gen::<f64>() * total;
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

pub(crate) fn corrupt(mut outcome: u64, n: usize, noise: &NoiseModel, rng: &mut impl Rng) -> u64 {
    if noise.p_global > 0.0 && rng.gen::<f64>() < noise.p_global {
        return rng.gen_range(0..(1u64 << n));
    }
    let (p0, p1) = (noise.flip_prob(false), noise.flip_prob(true));
    if p0 > 0.0 || p1 > 0.0 {
        for q in 0..n {
            let bit = outcome >> q & 1 == 1;
            let p = if bit { p1 } else { p0 };
            if p > 0.0 && rng.gen::<f64>() < p {
                outcome ^= 1 << q;
            }
        }
    }
    outcome
}

/// One computational-basis outcome with readout flips and global depolarisation.
pub fn sample_outcome<R: Rng + ?Sized>(state: &StateVector, noise: &NoiseModel, rng: &mut R) -> u64 {
    let u = rng.gen::<f64>() * state.norm_sqr();
    let mut acc = 0.0;
    let amps = state.amplitudes();
    let mut k = amps.len() - 1;
    for (i, a) in amps.iter().enumerate() {
        acc += a.norm_sqr();
        if acc > u {
            k = i;
            break;
        }
    }
    corrupt(k as u64, state.n_qubits(), noise, &mut &mut *rng)
}

/// Computational-basis samples with readout flips and global depolarisation.
pub fn sample_counts<R: Rng + ?Sized>(
    state: &StateVector,
    shots: u64,
    noise: &NoiseModel,
    rng: &mut R,
) -> SimResult<Histogram> {
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    noise.validate()?;
    let mut local = ChaCha8Rng::seed_from_u64(rng.gen());
    let cdf = cumulative(&state.probabilities());
    let n = state.n_qubits();
    let mut h = Histogram::new(n);
    for _ in 0..shots {
        let b = draw(&cdf, &mut local) as u64;
        h.add(corrupt(b, n, noise, &mut local), 1);
    }
    Ok(h)
}

/// Samples a gate-only circuit under Pauli noise using `trajectories` noise realisations
/// that share the shot budget.
///
/// Trajectories branch off a single noiseless pass at their first error, so only the
/// circuit suffix after that point is re-simulated.
pub fn sample_noisy_counts<R: Rng + ?Sized>(
    initial: &StateVector,
    circuit: &Circuit,
    noise: &NoiseModel,
    shots: u64,
    trajectories: usize,
    rng: &mut R,
) -> SimResult<Histogram> {
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    if !circuit.is_unitary_only() {
        return Err(SimError::NotUnitaryOnly);
    }
    circuit.validate()?;
    noise.validate()?;
    let gates: Vec<&Gate> = circuit.gates().collect();
    let m = trajectories.clamp(1, shots as usize);
    // error events per trajectory: (gate index, pauli)
    let mut events: Vec<Vec<(usize, Vec<(usize, Pauli)>)>> = Vec::with_capacity(m);
    let mut seeds = Vec::with_capacity(m);
    for _ in 0..m {
        let mut ev = Vec::new();
        for (g, gate) in gates.iter().enumerate() {
            let support = gate.support();
            let p = noise.gate_error_prob(support.len());
            if p > 0.0 && rng.gen::<f64>() < p {
                ev.push((g, random_error(&support, rng)));
            }
        }
        events.push(ev);
        seeds.push(rng.gen::<u64>());
    }
    let shots_of = |t: usize| shots / m as u64 + u64::from((t as u64) < shots % m as u64);

    let mut order: Vec<usize> = (0..m).filter(|&t| !events[t].is_empty()).collect();
    order.sort_by_key(|&t| (events[t][0].0, t));
    let mut finals: Vec<Option<StateVector>> = vec![None; m];
    let mut s = initial.clone();
    let mut next = 0;
    for (g, gate) in gates.iter().enumerate() {
        gate.apply(&mut s)?;
        while next < order.len() && events[order[next]][0].0 == g {
            let t = order[next];
            let mut branch = s.clone();
            let ev = &events[t];
            let mut k = 0;
            for (g2, gate2) in gates.iter().enumerate().skip(g) {
                if g2 > g {
                    gate2.apply(&mut branch)?;
                }
                while k < ev.len() && ev[k].0 == g2 {
                    apply_error(&mut branch, &ev[k].1)?;
                    k += 1;
                }
            }
            finals[t] = Some(branch);
            next += 1;
        }
    }
    let clean_cdf = cumulative(&s.probabilities());
    let n = initial.n_qubits();
    let mut h = Histogram::new(n);
    for t in 0..m {
        let mut local = ChaCha8Rng::seed_from_u64(seeds[t]);
        let cdf = match &finals[t] {
            Some(state) => cumulative(&state.probabilities()),
            None => clean_cdf.clone(),
        };
        for _ in 0..shots_of(t) {
            let b = draw(&cdf, &mut local) as u64;
            h.add(corrupt(b, n, noise, &mut local), 1);
        }
    }
    Ok(h)
}

/// Dense unitary of a gate-only circuit, as columns `U|k⟩`.
pub fn circuit_unitary(circuit: &Circuit) -> SimResult<Vec<StateVector>> {
    if !circuit.is_unitary_only() {
        return Err(SimError::NotUnitaryOnly);
    }
    circuit.validate()?;
    let n = circuit.n_qubits();
    (0..1usize << n)
        .map(|k| {
            let mut s = StateVector::basis(n, k)?;
            for g in circuit.gates() {
                g.apply(&mut s)?;
            }
            Ok(s)
        })
        .collect()
}

/// `min_φ max_jk |e^{iφ}A_jk − B_jk|` for unitaries given as column lists.
pub fn unitary_distance_up_to_phase(a: &[StateVector], b: &[StateVector]) -> f64 {
    let mut overlap = num_complex::Complex64::new(0.0, 0.0);
    for (ca, cb) in a.iter().zip(b) {
        overlap += ca.inner(cb);
    }
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { 1.0.into() };
    let mut err: f64 = 0.0;
    for (ca, cb) in a.iter().zip(b) {
        for (x, y) in ca.amplitudes().iter().zip(cb.amplitudes()) {
            err = err.max((x * phase - y).norm());
        }
    }
    err
}
