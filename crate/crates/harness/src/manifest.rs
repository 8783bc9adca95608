//! Run manifests and the stage runner with checkpointed replay.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use shadowlab::rng::derive_seed;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, HarnessResult};
use crate::output::{file_sha256, read_json, write_json};
use crate::registry::{ExperimentRegistry, StageContext};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the run directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub seed: u64,
    pub artifacts: Vec<Artifact>,
    pub wall_seconds: f64,
    /// Set when a replay found every artifact intact and did not rerun the stage.
    #[serde(default)]
    pub skipped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub code_version: String,
    pub master_seed: u64,
    pub params: Value,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn load(path: &Path) -> HarnessResult<Self> {
        read_json(path).map_err(|e| HarnessError::Replay(e.to_string()))
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }
}

/// Seed of stage `name` under `master`.
pub fn stage_seed(master: u64, name: &str) -> u64 {
    derive_seed(master, name, 0)
}

fn intact(out: &Path, rec: &StageRecord) -> bool {
    !rec.artifacts.is_empty()
        && rec.artifacts.iter().all(|a| file_sha256(&out.join(&a.path)).map(|h| h == a.sha256).unwrap_or(false))
}

/// Runs every stage of `config` into `out_dir`. With `previous`, a stage is skipped
/// while all of its recorded artifacts are still present and unchanged, and every later
/// stage is rerun once one stage has been regenerated.
pub fn execute(
    registry: &ExperimentRegistry,
    config: &ExperimentConfig,
    out_dir: &Path,
    previous: Option<&RunManifest>,
) -> HarnessResult<RunManifest> {
    let exp = registry.get(&config.experiment)?;
    let params = exp.normalize(&config.params)?;
    let config_hash = config.hash();
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut manifest = RunManifest {
        experiment: config.experiment.clone(),
        config: config.clone(),
        config_hash: config_hash.clone(),
        code_version: CODE_VERSION.to_string(),
        master_seed: config.seed,
        params: params.clone(),
        stages: Vec::new(),
    };
    let mut dirty = false;
    for &name in exp.stages() {
        let seed = stage_seed(config.seed, name);
        if !dirty {
            if let Some(rec) = previous.and_then(|m| m.stage(name)) {
                if intact(out_dir, rec) {
                    manifest.stages.push(StageRecord { skipped: true, ..rec.clone() });
                    continue;
                }
            }
        }
        dirty = true;
        let ctx = StageContext {
            stage: name.to_string(),
            params: params.clone(),
            master_seed: config.seed,
            seed,
            out_dir: out_dir.to_path_buf(),
            config_hash: config_hash.clone(),
        };
        let start = Instant::now();
        let paths = exp.run_stage(&ctx)?;
        let wall_seconds = start.elapsed().as_secs_f64();
        let artifacts = paths
            .iter()
            .map(|p| {
                let rel = p.strip_prefix(out_dir).unwrap_or(p);
                Ok(Artifact { path: rel.to_string_lossy().into_owned(), sha256: file_sha256(p)? })
            })
            .collect::<HarnessResult<Vec<_>>>()?;
        manifest.stages.push(StageRecord { name: name.to_string(), seed, artifacts, wall_seconds, skipped: false });
        write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    }
    write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Re-executes the run recorded in `manifest_path` in its own directory, after checking
/// the code version and that the stored config still hashes to the recorded value.
pub fn replay(registry: &ExperimentRegistry, manifest_path: &Path) -> HarnessResult<RunManifest> {
    let m = RunManifest::load(manifest_path)?;
    if m.code_version != CODE_VERSION {
        return Err(HarnessError::Replay(format!("code version {} does not match {}", m.code_version, CODE_VERSION)));
    }
    if m.config.hash() != m.config_hash {
        return Err(HarnessError::Replay("config hash does not match the stored config".into()));
    }
    let dir: PathBuf = manifest_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    execute(registry, &m.config, &dir, Some(&m))
}
