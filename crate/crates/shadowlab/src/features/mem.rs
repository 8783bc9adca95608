//! Readout calibration and measurement-error mitigation by response-matrix inversion.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{FeatureError, FeatureResult};
use crate::sim::run::corrupt;
use crate::sim::NoiseModel;

/// Column-stochastic `R[o, j] = P(read o | prepared j)` over `k`-bit strings.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseMatrix {
    pub k: usize,
    pub r: DMatrix<f64>,
}

impl ResponseMatrix {
    pub fn identity(k: usize) -> Self {
        Self { k, r: DMatrix::identity(1 << k, 1 << k) }
    }

    /// Infinite-shot response of `noise`: independent flips mixed with global depolarisation.
    pub fn exact(k: usize, noise: &NoiseModel) -> Self {
        let dim = 1usize << k;
        let (p01, p10) = (noise.flip_prob(false), noise.flip_prob(true));
        let r = DMatrix::from_fn(dim, dim, |o, j| {
            let flips: f64 = (0..k)
                .map(|q| {
                    let (src, dst) = (j >> q & 1 == 1, o >> q & 1 == 1);
                    let p = if src { p10 } else { p01 };
                    if src == dst { 1.0 - p } else { p }
                })
                .product();
            (1.0 - noise.p_global) * flips + noise.p_global / dim as f64
        });
        Self { k, r }
    }

    pub fn column_sum_error(&self) -> f64 {
        self.r.column_iter().map(|c| (c.sum() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Prepares every basis string `shots` times and records the corrupted readout.
pub fn calibrate_response<R: Rng + ?Sized>(
    k: usize,
    noise: &NoiseModel,
    shots: u64,
    rng: &mut R,
) -> FeatureResult<ResponseMatrix> {
    if shots == 0 {
        return Err(FeatureError::ZeroShots);
    }
    noise.validate()?;
    let dim = 1usize << k;
    let mut r = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        for _ in 0..shots {
            let o = corrupt(j as u64, k, noise, &mut &mut *rng) as usize;
            r[(o, j)] += 1.0;
        }
    }
    r /= shots as f64;
    Ok(ResponseMatrix { k, r })
}

/// `R⁻¹ p_exp`, unclipped; entries may come out slightly negative.
pub fn mitigate(resp: &ResponseMatrix, p_exp: &[f64]) -> FeatureResult<Vec<f64>> {
    if p_exp.len() != resp.r.nrows() {
        return Err(FeatureError::Dim { expected: resp.r.nrows(), got: p_exp.len() });
    }
    let lu = resp.r.clone().lu();
    let x = lu.solve(&DVector::from_column_slice(p_exp)).ok_or(FeatureError::Singular)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(FeatureError::Singular);
    }
    Ok(x.iter().copied().collect())
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut shift = 0.0;
    for (i, &x) in u.iter().enumerate() {
        acc += x;
        let t = (acc - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            shift = t;
        }
    }
    v.iter().map(|x| (x - shift).max(0.0)).collect()
}
