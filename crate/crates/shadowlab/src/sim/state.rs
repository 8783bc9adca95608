use num_complex::Complex64 as C64;
use rand::Rng;

use super::mat::{Mat2, Mat4};
use super::pauli::{Pauli, PauliMasks, PauliString};
use super::{SimError, SimResult};

pub const MAX_QUBITS: usize = 20;
const NORM_TOL: f64 = 1e-10;

/// Dense pure state; amplitude index bit `q` is qubit `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zero(n: usize) -> SimResult<Self> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> SimResult<Self> {
        if n > MAX_QUBITS {
            return Err(SimError::TooManyQubits(n));
        }
        if index >= 1 << n {
            return Err(SimError::LengthMismatch { expected: 1 << n, got: index });
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> SimResult<Self> {
        if n > MAX_QUBITS {
            return Err(SimError::TooManyQubits(n));
        }
        if amps.len() != 1 << n {
            return Err(SimError::LengthMismatch { expected: 1 << n, got: amps.len() });
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(SimError::NotNormalized(norm));
        }
        Ok(Self { n, amps })
    }

    /// Normalises an arbitrary non-zero vector.
    pub fn from_unnormalized(n: usize, mut amps: Vec<C64>) -> SimResult<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(SimError::NotNormalized(norm));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::from_amplitudes(n, amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Tensor product `self ⊗ other` with `other` on the higher qubits.
    /// Removes the top `k` qubits, which must all be in `|0⟩`.
    pub fn drop_top_qubits(&self, k: usize) -> SimResult<StateVector> {
        let keep = self.n.checked_sub(k).ok_or(SimError::QubitOutOfRange { qubit: k, n: self.n })?;
        let low = 1usize << keep;
        let leaked: f64 = self.amps[low..].iter().map(|a| a.norm_sqr()).sum();
        if leaked > 1e-10 {
            return Err(SimError::NotInZero(leaked));
        }
        StateVector::from_unnormalized(keep, self.amps[..low].to_vec())
    }

    pub fn kron(&self, other: &StateVector) -> SimResult<StateVector> {
        let n = self.n + other.n;
        if n > MAX_QUBITS {
            return Err(SimError::TooManyQubits(n));
        }
        let mut amps = Vec::with_capacity(1 << n);
        for b in &other.amps {
            for a in &self.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector { n, amps })
    }

    pub(crate) fn check_qubit(&self, q: usize) -> SimResult<()> {
        if q >= self.n {
            Err(SimError::QubitOutOfRange { qubit: q, n: self.n })
        } else {
            Ok(())
        }
    }

    pub fn apply_single(&mut self, q: usize, m: &Mat2) -> SimResult<()> {
        self.check_qubit(q)?;
        let stride = 1usize << q;
        let [[a, b], [c, d]] = *m;
        for block in self.amps.chunks_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (x0, x1) in lo.iter_mut().zip(hi.iter_mut()) {
                let v0 = *x0;
                let v1 = *x1;
                *x0 = a * v0 + b * v1;
                *x1 = c * v0 + d * v1;
            }
        }
        Ok(())
    }

    pub fn apply_cx(&mut self, control: usize, target: usize) -> SimResult<()> {
        self.check_pair(control, target)?;
        let (cm, tm) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
        Ok(())
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) -> SimResult<()> {
        self.check_pair(a, b)?;
        let m = (1usize << a) | (1usize << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & m == m {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    /// General two-qubit gate; the local basis index is `b_{q0} + 2 b_{q1}`.
    pub fn apply_two(&mut self, q0: usize, q1: usize, m: &Mat4) -> SimResult<()> {
        self.check_pair(q0, q1)?;
        let (m0, m1) = (1usize << q0, 1usize << q1);
        for i in 0..self.amps.len() {
            if i & (m0 | m1) != 0 {
                continue;
            }
            let idx = [i, i | m0, i | m1, i | m0 | m1];
            let v = [self.amps[idx[0]], self.amps[idx[1]], self.amps[idx[2]], self.amps[idx[3]]];
            for r in 0..4 {
                self.amps[idx[r]] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
            }
        }
        Ok(())
    }

    /// Applies the Pauli string as an operator (coefficient ignored).
    pub fn apply_pauli_string(&mut self, p: &PauliString) -> SimResult<()> {
        if p.n_qubits() != self.n {
            return Err(SimError::LengthMismatch { expected: self.n, got: p.n_qubits() });
        }
        let m = p.masks();
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (b, amp) in self.amps.iter().enumerate() {
            out[b ^ m.x] = m.phase(b) * amp;
        }
        self.amps = out;
        Ok(())
    }

    pub fn apply_pauli(&mut self, q: usize, p: Pauli) -> SimResult<()> {
        self.check_qubit(q)?;
        match p {
            Pauli::I => Ok(()),
            _ => self.apply_single(q, &p.matrix()),
        }
    }

    /// `exp(iθP)` for a Pauli product given as `(qubit, letter)` pairs.
    pub fn apply_pauli_exp(&mut self, theta: f64, paulis: &[(usize, Pauli)]) -> SimResult<()> {
        let mut m = PauliMasks { x: 0, z: 0, n_y: 0 };
        for &(q, p) in paulis {
            self.check_qubit(q)?;
            let (x, z) = p.bits();
            if x {
                m.x |= 1 << q;
            }
            if z {
                m.z |= 1 << q;
            }
            if p == Pauli::Y {
                m.n_y += 1;
            }
        }
        let (s, c) = theta.sin_cos();
        let is = C64::new(0.0, s);
        if m.x == 0 {
            for (b, amp) in self.amps.iter_mut().enumerate() {
                *amp *= c + is * m.phase(b);
            }
            return Ok(());
        }
        for b in 0..self.amps.len() {
            let partner = b ^ m.x;
            if partner < b {
                continue;
            }
            let (v0, v1) = (self.amps[b], self.amps[partner]);
            // P|b⟩ = phase(b)|partner⟩
            self.amps[b] = c * v0 + is * m.phase(partner) * v1;
            self.amps[partner] = c * v1 + is * m.phase(b) * v0;
        }
        Ok(())
    }

    fn check_pair(&self, a: usize, b: usize) -> SimResult<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(SimError::DuplicateQubits(a));
        }
        Ok(())
    }

    pub fn prob_one(&self, q: usize) -> SimResult<f64> {
        self.check_qubit(q)?;
        let m = 1usize << q;
        Ok(self.amps.iter().enumerate().filter(|(i, _)| i & m != 0).map(|(_, a)| a.norm_sqr()).sum())
    }

    /// Projects qubit `q` onto `outcome` and renormalises; returns the outcome probability.
    pub fn project(&mut self, q: usize, outcome: bool) -> SimResult<f64> {
        let p1 = self.prob_one(q)?;
        let p = if outcome { p1 } else { 1.0 - p1 };
        if p <= 1e-14 {
            return Err(SimError::ImpossibleOutcome { qubit: q, outcome });
        }
        let m = 1usize << q;
        let scale = 1.0 / p.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if ((i & m) != 0) == outcome {
                *a *= scale;
            } else {
                *a = C64::new(0.0, 0.0);
            }
        }
        Ok(p)
    }

    pub fn measure<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> SimResult<bool> {
        let p1 = self.prob_one(q)?;
        let outcome = rng.gen::<f64>() < p1;
        self.project(q, outcome)?;
        Ok(outcome)
    }

    /// Measures and flips back to `|0⟩` if needed.
    pub fn reset<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> SimResult<()> {
        if self.measure(q, rng)? {
            self.apply_single(q, &Pauli::X.matrix())?;
        }
        Ok(())
    }

    pub fn expectation(&self, p: &PauliString) -> SimResult<f64> {
        expectation(self, p)
    }
}

/// `⟨ψ|P|ψ⟩` times the string coefficient.
pub fn expectation(state: &StateVector, p: &PauliString) -> SimResult<f64> {
    if p.n_qubits() != state.n {
        return Err(SimError::LengthMismatch { expected: state.n, got: p.n_qubits() });
    }
    let m = p.masks();
    let mut acc = C64::new(0.0, 0.0);
    for (b, amp) in state.amps.iter().enumerate() {
        acc += state.amps[b ^ m.x].conj() * m.phase(b) * amp;
    }
    Ok(acc.re * p.coeff())
}
