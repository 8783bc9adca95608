use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kernels::{gram_matrix, KernelRegistry, KernelSpec};
use super::{MlError, MlResult};

const TAU: f64 = 1e-12;

/// Solution of the soft-margin dual for a precomputed kernel.
#[derive(Clone, Debug)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    /// Maximal KKT violation at termination.
    pub kkt_gap: f64,
    pub iterations: usize,
}

/// Sequential minimal optimisation with maximal-violating-pair selection.
pub fn svm_fit_gram(k: &DMatrix<f64>, labels: &[f64], c: f64, tol: f64, max_iter: usize) -> MlResult<DualSolution> {
    let n = labels.len();
    if k.nrows() != n || k.ncols() != n {
        return Err(MlError::Dim { expected: n, got: k.nrows() });
    }
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) || !labels.contains(&1.0) || !labels.contains(&-1.0) {
        return Err(MlError::BadLabels);
    }
    if !(c > 0.0) {
        return Err(MlError::BadParam(format!("C must be positive, got {c}")));
    }
    let y = labels;
    let q = |i: usize, j: usize| y[i] * y[j] * k[(i, j)];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);
    let mut iterations = 0;
    let mut gap;
    loop {
        let (mut i, mut gmax) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut gmin) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        gap = gmax - gmin;
        if i == usize::MAX || j == usize::MAX || gap < tol || iterations >= max_iter {
            break;
        }
        iterations += 1;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }
    // ρ from free vectors, or the midpoint of the feasible interval
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            sum_free += yg;
            n_free += 1;
        } else if (alpha[t] >= c && y[t] < 0.0) || (alpha[t] <= 0.0 && y[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { 0.5 * (ub + lb) };
    Ok(DualSolution { alpha, rho, kkt_gap: gap, iterations })
}

/// Kernel SVM with decision function `Σ_i α_i y_i k(x_i, x) − ρ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: KernelSpec,
    pub c: f64,
    pub points: Vec<Vec<f64>>,
    /// `α_i y_i` per training point.
    pub coef: Vec<f64>,
    pub rho: f64,
    pub kkt_gap: f64,
}

pub fn svm_fit(
    registry: &KernelRegistry,
    spec: &KernelSpec,
    points: &[Vec<f64>],
    labels: &[f64],
    c: f64,
) -> MlResult<SvmModel> {
    if points.len() != labels.len() {
        return Err(MlError::Dim { expected: points.len(), got: labels.len() });
    }
    let k = registry.build(spec)?;
    let g = gram_matrix(k.as_ref(), spec.normalize, points, points)?;
    let sol = svm_fit_gram(&g, labels, c, 1e-6, 10_000_000)?;
    Ok(SvmModel {
        kernel: spec.clone(),
        c,
        points: points.to_vec(),
        coef: sol.alpha.iter().zip(labels).map(|(a, y)| a * y).collect(),
        rho: sol.rho,
        kkt_gap: sol.kkt_gap,
    })
}

impl SvmModel {
    pub fn decision(&self, registry: &KernelRegistry, xs: &[Vec<f64>]) -> MlResult<Vec<f64>> {
        let k = registry.build(&self.kernel)?;
        let cross = gram_matrix(k.as_ref(), self.kernel.normalize, xs, &self.points)?;
        Ok((0..xs.len())
            .map(|r| cross.row(r).iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>() - self.rho)
            .collect())
    }

    /// Labels in `{−1, +1}`; a zero decision value maps to `+1`.
    pub fn predict(&self, registry: &KernelRegistry, xs: &[Vec<f64>]) -> MlResult<Vec<f64>> {
        Ok(self.decision(registry, xs)?.into_iter().map(|d| if d >= 0.0 { 1.0 } else { -1.0 }).collect())
    }

    /// Weight vector of a linear-kernel model.
    pub fn linear_weights(&self) -> Option<Vec<f64>> {
        if self.kernel.name != "linear" || self.kernel.normalize {
            return None;
        }
        let d = self.points.first()?.len();
        Some((0..d).map(|f| self.points.iter().zip(&self.coef).map(|(p, c)| p[f] * c).sum()).collect())
    }
}
