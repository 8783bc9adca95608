//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, HarnessResult};

/// Top-level config: which experiment, the master seed and experiment parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "empty_object")]
    pub params: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

impl ExperimentConfig {
    pub fn new(experiment: &str, seed: u64, params: Value) -> Self {
        Self { experiment: experiment.to_string(), seed, output_dir: None, params }
    }

    pub fn load(path: &Path) -> HarnessResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> HarnessResult<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// SHA-256 over the canonical JSON form (keys sorted) of experiment, seed and params.
    /// The output directory is excluded so moving a run does not change its identity.
    pub fn hash(&self) -> String {
        let canonical = serde_json::json!({
            "experiment": self.experiment,
            "seed": self.seed,
            "params": self.params,
        });
        sha256_hex(canonical.to_string().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Deserialises typed parameters, rejecting unknown keys through the target type.
pub fn parse_params<T: DeserializeOwned>(params: &Value) -> HarnessResult<T> {
    serde_json::from_value(params.clone()).map_err(|e| HarnessError::Config(format!("params: {e}")))
}

pub fn check(cond: bool, msg: impl Into<String>) -> HarnessResult<()> {
    if cond {
        Ok(())
    } else {
        Err(HarnessError::Config(msg.into()))
    }
}
