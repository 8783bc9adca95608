//! Experiments as trait objects, looked up by name.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::Value;

use crate::error::{HarnessError, HarnessResult};

/// What a stage sees: normalised parameters, its derived seed and the run directory.
#[derive(Clone, Debug)]
pub struct StageContext {
    pub stage: String,
    pub params: Value,
    pub master_seed: u64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub config_hash: String,
}

impl StageContext {
    pub fn path(&self, rel: &str) -> PathBuf {
        self.out_dir.join(rel)
    }

    pub fn out(&self) -> &Path {
        &self.out_dir
    }
}

/// A pipeline of named stages. Later stages read earlier stages' artifacts from disk,
/// so any prefix of stages can be skipped on replay.
pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    /// Checks `params` and returns them with defaults filled in.
    fn normalize(&self, params: &Value) -> HarnessResult<Value>;

    fn stages(&self) -> &'static [&'static str];

    /// Runs one stage and returns the artifacts it wrote.
    fn run_stage(&self, ctx: &StageContext) -> HarnessResult<Vec<PathBuf>>;
}

#[derive(Clone)]
pub struct ExperimentRegistry {
    entries: BTreeMap<String, Arc<dyn Experiment>>,
}

impl ExperimentRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    pub fn register(&mut self, exp: Arc<dyn Experiment>) {
        self.entries.insert(exp.name().to_string(), exp);
    }

    pub fn get(&self, name: &str) -> HarnessResult<Arc<dyn Experiment>> {
        self.entries.get(name).cloned().ok_or_else(|| HarnessError::UnknownExperiment(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}

impl Default for ExperimentRegistry {
    fn default() -> Self {
        use crate::experiments::*;
        let mut r = Self::empty();
        r.register(Arc::new(PredictGroundState));
        r.register(Arc::new(ClassifySpt));
        r.register(Arc::new(ClassifyTopo));
        r.register(Arc::new(ExtractClassifier));
        r
    }
}
