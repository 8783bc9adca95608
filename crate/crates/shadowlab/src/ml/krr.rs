use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use super::kernels::{gram_matrix, KernelRegistry, KernelSpec};
use super::{rmse, MlError, MlResult};

/// Ridge values searched on validation data.
pub const LAMBDA_GRID: [f64; 10] = [0.0125, 0.025, 0.05, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

/// Solves `(K + λI) A = Y` through one Cholesky factorisation shared by all columns,
/// retrying with a trace-scaled jitter when the factorisation fails.
pub fn solve_spd(k: &DMatrix<f64>, lambda: f64, y: &DMatrix<f64>) -> MlResult<DMatrix<f64>> {
    let n = k.nrows();
    if k.ncols() != n || y.nrows() != n {
        return Err(MlError::Dim { expected: n, got: y.nrows() });
    }
    let mut a = k.clone();
    for i in 0..n {
        a[(i, i)] += lambda;
    }
    if let Some(ch) = Cholesky::new(a.clone()) {
        return Ok(ch.solve(y));
    }
    if lambda == 0.0 {
        return Err(MlError::Singular);
    }
    let jitter = 1e-10 * a.trace().abs().max(1.0) / n as f64;
    for i in 0..n {
        a[(i, i)] += jitter;
    }
    Cholesky::new(a).map(|ch| ch.solve(y)).ok_or(MlError::Singular)
}

/// Dual coefficients `A = (K + λI)^{-1} Y` and the data needed to predict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KrrModel {
    pub kernel: KernelSpec,
    pub lambda: f64,
    pub inputs: Vec<Vec<f64>>,
    /// `N_data × n_targets`, row-major.
    pub coeffs: Vec<Vec<f64>>,
}

pub fn krr_fit(
    registry: &KernelRegistry,
    spec: &KernelSpec,
    inputs: &[Vec<f64>],
    targets: &DMatrix<f64>,
    lambda: f64,
) -> MlResult<KrrModel> {
    if inputs.is_empty() {
        return Err(MlError::Empty);
    }
    if targets.nrows() != inputs.len() {
        return Err(MlError::Dim { expected: inputs.len(), got: targets.nrows() });
    }
    if inputs.iter().flatten().chain(targets.iter()).any(|v| !v.is_finite()) {
        return Err(MlError::NonFinite);
    }
    let k = registry.build(spec)?;
    let gram = gram_matrix(k.as_ref(), spec.normalize, inputs, inputs)?;
    let a = krr_fit_gram(&gram, targets, lambda)?;
    Ok(KrrModel {
        kernel: spec.clone(),
        lambda,
        inputs: inputs.to_vec(),
        coeffs: a.row_iter().map(|r| r.iter().copied().collect()).collect(),
    })
}

/// Dual coefficients for a precomputed Gram matrix.
pub fn krr_fit_gram(gram: &DMatrix<f64>, targets: &DMatrix<f64>, lambda: f64) -> MlResult<DMatrix<f64>> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(MlError::BadParam(format!("lambda must be non-negative, got {lambda}")));
    }
    solve_spd(gram, lambda, targets)
}

impl KrrModel {
    pub fn coeff_matrix(&self) -> DMatrix<f64> {
        let m = self.coeffs.first().map_or(0, |r| r.len());
        DMatrix::from_fn(self.coeffs.len(), m, |i, j| self.coeffs[i][j])
    }

    /// Predictions for each row of `xs`, as an `xs.len() × n_targets` matrix.
    pub fn predict(&self, registry: &KernelRegistry, xs: &[Vec<f64>]) -> MlResult<DMatrix<f64>> {
        let k = registry.build(&self.kernel)?;
        let cross = gram_matrix(k.as_ref(), self.kernel.normalize, xs, &self.inputs)?;
        Ok(cross * self.coeff_matrix())
    }

    pub fn to_json(&self) -> MlResult<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> MlResult<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Grid value with the smallest validation RMSE; ties go to the smaller λ.
pub fn select_lambda(
    registry: &KernelRegistry,
    spec: &KernelSpec,
    train: (&[Vec<f64>], &DMatrix<f64>),
    validation: (&[Vec<f64>], &DMatrix<f64>),
    grid: &[f64],
) -> MlResult<(f64, Vec<f64>)> {
    if grid.is_empty() || train.0.is_empty() || validation.0.is_empty() {
        return Err(MlError::Empty);
    }
    let k = registry.build(spec)?;
    let gram = gram_matrix(k.as_ref(), spec.normalize, train.0, train.0)?;
    let cross = gram_matrix(k.as_ref(), spec.normalize, validation.0, train.0)?;
    let mut scores = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let a = krr_fit_gram(&gram, train.1, lambda)?;
        scores.push(rmse(&(&cross * a), validation.1)?);
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]).then(grid[i].total_cmp(&grid[j])));
    Ok((grid[order[0]], scores))
}
