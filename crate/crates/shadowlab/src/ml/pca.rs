use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{MlError, MlResult};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PcaEmbedding {
    /// Spectrum of the (centred) Gram matrix, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors of the leading components, one `Vec` per component.
    pub components: Vec<Vec<f64>>,
    /// Training projections, `N × n_components`.
    pub embedding: Vec<Vec<f64>>,
    pub centered: bool,
    /// Set when fewer than `n_components` eigenvalues are positive.
    pub insufficient_rank: bool,
    /// Smallest eigenvalue, kept to audit indefinite kernels.
    pub min_eigenvalue: f64,
    col_means: Vec<f64>,
    total_mean: f64,
}

/// Kernel PCA of a Gram matrix; `center` applies the usual double centring.
pub fn kernel_pca(gram: &DMatrix<f64>, n_components: usize, center: bool) -> MlResult<PcaEmbedding> {
    let n = gram.nrows();
    if n == 0 {
        return Err(MlError::Empty);
    }
    if gram.ncols() != n {
        return Err(MlError::Dim { expected: n, got: gram.ncols() });
    }
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(MlError::NonFinite);
    }
    let col_means: Vec<f64> = (0..n).map(|j| gram.column(j).mean()).collect();
    let total_mean = col_means.iter().sum::<f64>() / n as f64;
    let mut k = (gram + gram.transpose()) * 0.5;
    if center {
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] += total_mean - col_means[i] - col_means[j];
            }
        }
    }
    let eig = SymmetricEigen::new(k);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let scale = eigenvalues.first().copied().unwrap_or(0.0).abs().max(1e-300);
    let positive = eigenvalues.iter().filter(|&&l| l > 1e-12 * scale).count();
    let c = n_components.min(n);
    let mut components = Vec::with_capacity(c);
    for &idx in order.iter().take(c) {
        let v = eig.eigenvectors.column(idx);
        let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() + 1e-12 { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        components.push(v.iter().map(|x| sign * x).collect::<Vec<f64>>());
    }
    let embedding = (0..n)
        .map(|i| {
            components
                .iter()
                .zip(&eigenvalues)
                .map(|(v, &l)| v[i] * l.max(0.0).sqrt())
                .collect()
        })
        .collect();
    Ok(PcaEmbedding {
        min_eigenvalue: eigenvalues.last().copied().unwrap_or(0.0),
        eigenvalues,
        components,
        embedding,
        centered: center,
        insufficient_rank: positive < n_components,
        col_means,
        total_mean,
    })
}

impl PcaEmbedding {
    /// Projects a new point given its kernel row against the training points.
    pub fn project(&self, row: &[f64]) -> MlResult<Vec<f64>> {
        let n = self.col_means.len();
        if row.len() != n {
            return Err(MlError::Dim { expected: n, got: row.len() });
        }
        let mut r = row.to_vec();
        if self.centered {
            let mean = row.iter().sum::<f64>() / n as f64;
            for (i, v) in r.iter_mut().enumerate() {
                *v += self.total_mean - mean - self.col_means[i];
            }
        }
        Ok(self
            .components
            .iter()
            .zip(&self.eigenvalues)
            .map(|(v, &l)| if l > 0.0 { v.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / l.sqrt() } else { 0.0 })
            .collect())
    }
}
