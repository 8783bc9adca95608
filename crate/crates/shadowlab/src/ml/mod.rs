//! Kernel learning: a by-name kernel registry, kernel ridge regression, kernel PCA and
//! a dual SVM solver.

mod kernels;
mod krr;
mod pca;
mod svm;

use nalgebra::DMatrix;
use thiserror::Error;

pub use kernels::{
    gaussian_alpha, gram_matrix, svm_gaussian_alpha, GaussianKernel, Kernel, KernelRegistry, KernelSpec, LinearKernel,
    ModifiedDirichletKernel,
};
pub use krr::{krr_fit, krr_fit_gram, select_lambda, solve_spd, KrrModel, LAMBDA_GRID};
pub use pca::{kernel_pca, PcaEmbedding};
pub use svm::{svm_fit, svm_fit_gram, DualSolution, SvmModel};

#[derive(Debug, Error)]
pub enum MlError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dim { expected: usize, got: usize },
    #[error("unknown kernel {0:?}")]
    UnknownKernel(String),
    #[error("invalid kernel parameter: {0}")]
    BadParam(String),
    #[error("kernel self-value is zero")]
    ZeroSelfKernel,
    #[error("linear system is singular")]
    Singular,
    #[error("empty input")]
    Empty,
    #[error("labels must be ±1 with both classes present")]
    BadLabels,
    #[error("non-finite value in input")]
    NonFinite,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type MlResult<T> = Result<T, MlError>;

/// Mean over samples (rows) of the per-sample RMSE across columns.
pub fn rmse(pred: &DMatrix<f64>, exact: &DMatrix<f64>) -> MlResult<f64> {
    if pred.shape() != exact.shape() {
        return Err(MlError::Dim { expected: exact.len(), got: pred.len() });
    }
    if pred.nrows() == 0 || pred.ncols() == 0 {
        return Err(MlError::Empty);
    }
    let per_row: f64 = (0..pred.nrows())
        .map(|i| ((pred.row(i) - exact.row(i)).norm_squared() / pred.ncols() as f64).sqrt())
        .sum();
    Ok(per_row / pred.nrows() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_examples() {
        let a = DMatrix::from_row_slice(2, 3, &[0.1, 0.2, 0.3, -1.0, 0.0, 2.0]);
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        let shifted = a.map(|v| v + 0.25);
        assert!((rmse(&shifted, &a).unwrap() - 0.25).abs() < 1e-12);
        let b = DMatrix::from_row_slice(2, 3, &[0.0, 0.5, 0.3, -1.5, 0.1, 2.0]);
        let mut naive = 0.0;
        for i in 0..2 {
            let mut s = 0.0;
            for j in 0..3 {
                s += (a[(i, j)] - b[(i, j)]).powi(2);
            }
            naive += (s / 3.0).sqrt();
        }
        assert!((rmse(&a, &b).unwrap() - naive / 2.0).abs() < 1e-12);
        assert!(rmse(&a, &DMatrix::zeros(3, 2)).is_err());
    }
}
