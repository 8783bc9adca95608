use serde::{Deserialize, Serialize};

use super::{SimError, SimResult};

/// Stochastic Pauli noise, readout flips and global depolarisation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p_single: f64,
    pub p_two: f64,
    /// Symmetric readout flip rate, used unless an asymmetric rate overrides it.
    pub p_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_m01: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_m10: Option<f64>,
    #[serde(default)]
    pub p_global: f64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn new(p_single: f64, p_two: f64, p_m: f64) -> SimResult<Self> {
        let m = Self { p_single, p_two, p_m, ..Self::default() };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> SimResult<()> {
        let rates = [
            self.p_single,
            self.p_two,
            self.p_m,
            self.p_m01.unwrap_or(0.0),
            self.p_m10.unwrap_or(0.0),
            self.p_global,
        ];
        if rates.iter().all(|r| (0.0..=1.0).contains(r)) {
            Ok(())
        } else {
            Err(SimError::InvalidRate)
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.p_single == 0.0
            && self.p_two == 0.0
            && self.flip_prob(false) == 0.0
            && self.flip_prob(true) == 0.0
            && self.p_global == 0.0
    }

    /// Readout flip probability given the true bit value.
    pub fn flip_prob(&self, bit: bool) -> f64 {
        if bit {
            self.p_m10.unwrap_or(self.p_m)
        } else {
            self.p_m01.unwrap_or(self.p_m)
        }
    }

    pub fn gate_error_prob(&self, support_len: usize) -> f64 {
        if support_len >= 2 {
            self.p_two
        } else {
            self.p_single
        }
    }

    /// All rates multiplied by `factor`, clamped to 1.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |p: f64| (p * factor).min(1.0);
        Self {
            p_single: s(self.p_single),
            p_two: s(self.p_two),
            p_m: s(self.p_m),
            p_m01: self.p_m01.map(s),
            p_m10: self.p_m10.map(s),
            p_global: s(self.p_global),
        }
    }
}
