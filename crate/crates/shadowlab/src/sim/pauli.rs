use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::mat::Mat2;
use super::{SimError, SimResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_index(i: usize) -> Pauli {
        Self::ALL[i & 3]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        ['I', 'X', 'Y', 'Z'][self.index()]
    }

    /// Symplectic bits `(x, z)`; Y carries both.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn matrix(self) -> Mat2 {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

/// Bit masks describing the action `P|b⟩ = i^{n_y} (-1)^{|b ∧ z|} |b ⊕ x⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PauliMasks {
    pub x: usize,
    pub z: usize,
    pub n_y: u32,
}

impl PauliMasks {
    #[inline]
    pub fn phase(&self, b: usize) -> C64 {
        let sign = if (b & self.z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        match self.n_y % 4 {
            0 => C64::new(sign, 0.0),
            1 => C64::new(0.0, sign),
            2 => C64::new(-sign, 0.0),
            _ => C64::new(0.0, -sign),
        }
    }
}

/// A weighted tensor product of single-qubit Paulis; letter `k` acts on qubit `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    letters: Vec<Pauli>,
    coeff: f64,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>, coeff: f64) -> SimResult<Self> {
        if !coeff.is_finite() {
            return Err(SimError::NonFinite);
        }
        Ok(Self { letters, coeff })
    }

    pub fn identity(n: usize) -> Self {
        Self { letters: vec![Pauli::I; n], coeff: 1.0 }
    }

    /// Parses a label such as `"ZXZI"` (first character is qubit 0).
    pub fn parse(label: &str, coeff: f64) -> SimResult<Self> {
        let letters = label
            .chars()
            .map(|c| Pauli::from_char(c).ok_or(SimError::BadLabel(label.to_string())))
            .collect::<SimResult<Vec<_>>>()?;
        Self::new(letters, coeff)
    }

    pub fn from_sparse(n: usize, terms: &[(usize, Pauli)], coeff: f64) -> SimResult<Self> {
        let mut letters = vec![Pauli::I; n];
        for &(q, p) in terms {
            if q >= n {
                return Err(SimError::QubitOutOfRange { qubit: q, n });
            }
            letters[q] = p;
        }
        Self::new(letters, coeff)
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn with_coeff(mut self, coeff: f64) -> Self {
        self.coeff = coeff;
        self
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.letters.len()).filter(|&q| self.letters[q] != Pauli::I).collect()
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn masks(&self) -> PauliMasks {
        let mut m = PauliMasks { x: 0, z: 0, n_y: 0 };
        for (q, &p) in self.letters.iter().enumerate() {
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
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*", self.coeff)?;
        for p in &self.letters {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}
