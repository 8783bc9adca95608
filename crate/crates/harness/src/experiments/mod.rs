//! The four pipelines and the helpers they share.

mod extract;
mod ground_state;
mod spt;
mod topo;

pub use extract::{ExtractClassifier, ExtractParams, ExtractReport};
pub use ground_state::{GroundStateParams, PredictGroundState, PredictReport};
pub use spt::{ClassifySpt, SptParams, SptReport};
pub use topo::{ClassifyTopo, FamilyResult, MarginRow, TopoParams, TopoReport};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use shadowlab::shadows::{self, KernelVariant, PreparedShadows, ShadowSet};

use crate::error::{HarnessError, HarnessResult};
use crate::registry::StageContext;

/// Attaches the running stage name to any displayable error.
pub(crate) trait AtStage<T> {
    fn at(self, ctx: &StageContext) -> HarnessResult<T>;
}

impl<T, E: std::fmt::Display> AtStage<T> for Result<T, E> {
    fn at(self, ctx: &StageContext) -> HarnessResult<T> {
        self.map_err(|e| HarnessError::stage(&ctx.stage, e))
    }
}

/// Hyperparameters of the shadow kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShadowKernelParams {
    #[serde(default = "one")]
    pub tau: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "full")]
    pub variant: KernelVariant,
}

fn one() -> f64 {
    1.0
}

fn full() -> KernelVariant {
    KernelVariant::Full
}

impl Default for ShadowKernelParams {
    fn default() -> Self {
        Self { tau: 1.0, gamma: 1.0, variant: KernelVariant::Full }
    }
}

impl ShadowKernelParams {
    pub fn validate(&self) -> HarnessResult<()> {
        crate::config::check(self.tau > 0.0 && self.tau.is_finite(), "kernel.tau must be positive")?;
        crate::config::check(self.gamma >= 0.0 && self.gamma.is_finite(), "kernel.gamma must be non-negative")
    }
}

/// Normalised shadow kernels between a training batch and a second batch.
pub struct ShadowGram {
    pub train: Vec<PreparedShadows>,
    self_log: Vec<f64>,
    pub normalized: DMatrix<f64>,
    params: ShadowKernelParams,
}

impl ShadowGram {
    pub fn new(sets: &[&ShadowSet], params: ShadowKernelParams) -> shadows::ShadowResult<Self> {
        let train: Vec<PreparedShadows> = sets.iter().map(|s| PreparedShadows::new(s)).collect();
        let g = shadows::gram_prepared(&train, params.tau, params.gamma, params.variant)?;
        let self_log = (0..train.len()).map(|i| g.log[(i, i)]).collect();
        Ok(Self { train, self_log, normalized: g.normalized(), params })
    }

    /// Rows `k(x, train_j) / √(k(x, x) k(train_j, train_j))` for each new set `x`.
    pub fn cross(&self, sets: &[&ShadowSet]) -> shadows::ShadowResult<DMatrix<f64>> {
        let p = self.params;
        let other: Vec<PreparedShadows> = sets.iter().map(|s| PreparedShadows::new(s)).collect();
        let logs = shadows::cross_gram(&other, &self.train, p.tau, p.gamma, p.variant)?;
        let diag = other
            .iter()
            .map(|x| shadows::log_shadow_kernel(x, x, p.tau, p.gamma, p.variant))
            .collect::<shadows::ShadowResult<Vec<f64>>>()?;
        Ok(DMatrix::from_fn(other.len(), self.train.len(), |i, j| {
            (logs[(i, j)] - 0.5 * (diag[i] + self.self_log[j])).exp()
        }))
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Gap between two 1-D point clouds: positive when they do not overlap, in whichever
/// order separates them.
pub fn separation_margin(a: &[f64], b: &[f64]) -> f64 {
    let (amin, amax) = min_max(a);
    let (bmin, bmax) = min_max(b);
    (amin - bmax).max(bmin - amax)
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, var.sqrt())
}

/// Number of places where a sequence increases.
pub fn inversions(v: &[f64]) -> usize {
    v.windows(2).filter(|w| w[1] > w[0]).count()
}
