use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{MlError, MlResult};

/// A positive-definite similarity on real feature vectors.
pub trait Kernel: Send + Sync {
    fn name(&self) -> &str;
    /// Unnormalised value `k̃(x, y)`.
    fn raw(&self, x: &[f64], y: &[f64]) -> f64;
}

/// Serializable kernel choice resolved through a [`KernelRegistry`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default = "default_true")]
    pub normalize: bool,
}

fn default_true() -> bool {
    true
}

impl KernelSpec {
    pub fn new(name: &str) -> Self {
        Self { name: name.into(), params: BTreeMap::new(), normalize: true }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn gaussian(alpha: f64) -> Self {
        Self::new("gaussian").with_param("alpha", alpha)
    }

    pub fn modified_dirichlet() -> Self {
        Self::new("modified-dirichlet").with_param("cutoff", 3.0)
    }

    pub fn linear() -> Self {
        Self { normalize: false, ..Self::new("linear") }
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }
}

/// `exp(−α‖x − y‖²)`.
#[derive(Clone, Debug)]
pub struct GaussianKernel {
    pub alpha: f64,
}

impl Kernel for GaussianKernel {
    fn name(&self) -> &str {
        "gaussian"
    }

    fn raw(&self, x: &[f64], y: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        (-self.alpha * d2).exp()
    }
}

/// `Σ_{i≠j} Σ_{|k_i|,|k_j| ≤ K} cos(π(k_i Δ_i + k_j Δ_j))`, evaluated as `(Σ D_i)² − Σ D_i²`
/// with `D_i = 1 + 2 Σ_{k=1}^{K} cos(π k Δ_i)`.
#[derive(Clone, Debug)]
pub struct ModifiedDirichletKernel {
    pub cutoff: usize,
}

impl Kernel for ModifiedDirichletKernel {
    fn name(&self) -> &str {
        "modified-dirichlet"
    }

    fn raw(&self, x: &[f64], y: &[f64]) -> f64 {
        let (mut s, mut s2) = (0.0, 0.0);
        for (a, b) in x.iter().zip(y) {
            let t = std::f64::consts::PI * (a - b);
            let d = 1.0 + 2.0 * (1..=self.cutoff).map(|k| (k as f64 * t).cos()).sum::<f64>();
            s += d;
            s2 += d * d;
        }
        s * s - s2
    }
}

#[derive(Clone, Debug)]
pub struct LinearKernel;

impl Kernel for LinearKernel {
    fn name(&self) -> &str {
        "linear"
    }

    fn raw(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(a, b)| a * b).sum()
    }
}

type Factory = Arc<dyn Fn(&KernelSpec) -> MlResult<Arc<dyn Kernel>> + Send + Sync>;

/// Name → kernel constructor table.
#[derive(Clone)]
pub struct KernelRegistry {
    factories: BTreeMap<String, Factory>,
}

impl Default for KernelRegistry {
    fn default() -> Self {
        let mut r = Self { factories: BTreeMap::new() };
        r.register("gaussian", |spec| {
            let alpha = spec.param("alpha").ok_or_else(|| MlError::BadParam("gaussian needs alpha".into()))?;
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(MlError::BadParam(format!("alpha must be positive, got {alpha}")));
            }
            Ok(Arc::new(GaussianKernel { alpha }))
        });
        r.register("modified-dirichlet", |spec| {
            let cutoff = spec.param("cutoff").unwrap_or(3.0);
            if cutoff < 0.0 || cutoff.fract() != 0.0 {
                return Err(MlError::BadParam(format!("cutoff must be a non-negative integer, got {cutoff}")));
            }
            Ok(Arc::new(ModifiedDirichletKernel { cutoff: cutoff as usize }))
        });
        r.register("linear", |_| Ok(Arc::new(LinearKernel)));
        r
    }
}

impl KernelRegistry {
    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&KernelSpec) -> MlResult<Arc<dyn Kernel>> + Send + Sync + 'static,
    {
        self.factories.insert(name.into(), Arc::new(factory));
    }

    pub fn names(&self) -> Vec<String> {
        self.factories.keys().cloned().collect()
    }

    pub fn build(&self, spec: &KernelSpec) -> MlResult<Arc<dyn Kernel>> {
        let f = self.factories.get(&spec.name).ok_or_else(|| MlError::UnknownKernel(spec.name.clone()))?;
        f(spec)
    }

    /// Kernel value with optional normalisation `k̃(x, y)/√(k̃(x, x) k̃(y, y))`.
    pub fn eval(&self, spec: &KernelSpec, x: &[f64], y: &[f64]) -> MlResult<f64> {
        let k = self.build(spec)?;
        evaluate(k.as_ref(), spec.normalize, x, y)
    }
}

pub(crate) fn evaluate(k: &dyn Kernel, normalize: bool, x: &[f64], y: &[f64]) -> MlResult<f64> {
    if x.len() != y.len() {
        return Err(MlError::Dim { expected: x.len(), got: y.len() });
    }
    let v = k.raw(x, y);
    if !normalize {
        return Ok(v);
    }
    let denom = (k.raw(x, x) * k.raw(y, y)).sqrt();
    if !(denom > 0.0) {
        return Err(MlError::ZeroSelfKernel);
    }
    Ok(v / denom)
}

/// Kernel matrix `K_ij = k(a_i, b_j)`.
pub fn gram_matrix(k: &dyn Kernel, normalize: bool, a: &[Vec<f64>], b: &[Vec<f64>]) -> MlResult<DMatrix<f64>> {
    let self_a: Vec<f64> = a.iter().map(|x| k.raw(x, x)).collect();
    let self_b: Vec<f64> = b.iter().map(|x| k.raw(x, x)).collect();
    let mut out = DMatrix::zeros(a.len(), b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if x.len() != y.len() {
                return Err(MlError::Dim { expected: x.len(), got: y.len() });
            }
            let mut v = k.raw(x, y);
            if normalize {
                let d = (self_a[i] * self_b[j]).sqrt();
                if !(d > 0.0) {
                    return Err(MlError::ZeroSelfKernel);
                }
                v /= d;
            }
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// `α = N² / Σ_ij ‖x_i − x_j‖²` for the regression Gaussian kernel.
pub fn gaussian_alpha(xs: &[Vec<f64>]) -> MlResult<f64> {
    let n = xs.len();
    if n < 2 {
        return Err(MlError::Empty);
    }
    let mut total = 0.0;
    for a in xs {
        for b in xs {
            total += a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();
        }
    }
    if !(total > 0.0) {
        return Err(MlError::BadParam("all inputs coincide".into()));
    }
    Ok((n * n) as f64 / total)
}

/// `α = 1 / (n_feature · Var(X))` over all feature entries, for the classifier Gaussian kernel.
pub fn svm_gaussian_alpha(xs: &[Vec<f64>]) -> MlResult<f64> {
    let n_feature = xs.first().map(|x| x.len()).ok_or(MlError::Empty)?;
    let count = (xs.len() * n_feature) as f64;
    let mean = xs.iter().flatten().sum::<f64>() / count;
    let var = xs.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
    if !(var > 0.0) {
        return Err(MlError::BadParam("zero feature variance".into()));
    }
    Ok(1.0 / (n_feature as f64 * var))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_self_value_is_one() {
        let r = KernelRegistry::default();
        let v = r.eval(&KernelSpec::gaussian(0.3), &[0.2, 1.0], &[0.2, 1.0]).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn dirichlet_self_value_counts_pairs() {
        let k = ModifiedDirichletKernel { cutoff: 3 };
        let x: Vec<f64> = (0..11).map(|i| i as f64 * 0.17).collect();
        assert!((k.raw(&x, &x) - 5390.0).abs() < 1e-9);
    }

    #[test]
    fn dirichlet_factorisation_matches_direct_sum() {
        let k = ModifiedDirichletKernel { cutoff: 3 };
        let x = [0.3, 1.7, 0.9, 0.1];
        let y = [1.2, 0.4, 0.95, 1.9];
        let mut direct = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                for ki in -3i32..=3 {
                    for kj in -3i32..=3 {
                        let arg = ki as f64 * (x[i] - y[i]) + kj as f64 * (x[j] - y[j]);
                        direct += (std::f64::consts::PI * arg).cos();
                    }
                }
            }
        }
        assert!((k.raw(&x, &y) - direct).abs() < 1e-9);
    }

    #[test]
    fn alpha_heuristic_example() {
        let xs = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        assert!((gaussian_alpha(&xs).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn svm_alpha_matches_variance_rule() {
        let xs = vec![vec![0.0, 1.0], vec![2.0, 3.0]];
        // mean 1.5, variance (2.25 + 0.25 + 0.25 + 2.25)/4 = 1.25
        assert!((svm_gaussian_alpha(&xs).unwrap() - 1.0 / 2.5).abs() < 1e-15);
    }

    #[test]
    fn registry_resolves_names_and_rejects_unknown() {
        let r = KernelRegistry::default();
        assert_eq!(r.names(), vec!["gaussian", "linear", "modified-dirichlet"]);
        assert!(matches!(r.build(&KernelSpec::new("ntk")), Err(MlError::UnknownKernel(_))));
        assert!(matches!(r.build(&KernelSpec::gaussian(-1.0)), Err(MlError::BadParam(_))));
        assert_eq!(r.build(&KernelSpec::modified_dirichlet()).unwrap().name(), "modified-dirichlet");
    }

    #[test]
    fn normalised_kernels_are_symmetric_with_unit_diagonal() {
        let r = KernelRegistry::default();
        let xs = vec![vec![0.1, 1.3, 0.4], vec![1.9, 0.2, 0.8], vec![0.5, 0.5, 1.5]];
        for spec in [KernelSpec::gaussian(0.7), KernelSpec::modified_dirichlet()] {
            let k = r.build(&spec).unwrap();
            let g = gram_matrix(k.as_ref(), true, &xs, &xs).unwrap();
            for i in 0..3 {
                assert!((g[(i, i)] - 1.0).abs() < 1e-12);
                for j in 0..3 {
                    assert_eq!(g[(i, j)], g[(j, i)]);
                }
            }
        }
    }

    #[test]
    fn zero_self_kernel_is_an_error() {
        let r = KernelRegistry::default();
        let spec = KernelSpec { normalize: true, ..KernelSpec::linear() };
        assert!(matches!(r.eval(&spec, &[0.0], &[1.0]), Err(MlError::ZeroSelfKernel)));
    }
}
