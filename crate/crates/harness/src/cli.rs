//! `shadowlab <experiment> --config <path> [--seed N] [--out DIR] [--replay MANIFEST]`
//! and `shadowlab validate-config --config <path>`.

use std::path::{Path, PathBuf};

use clap::Parser;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, HarnessResult, EXIT_CONFIG, EXIT_OK};
use crate::manifest::{execute, replay, RunManifest, MANIFEST_FILE};
use crate::registry::ExperimentRegistry;

pub const VALIDATE: &str = "validate-config";
pub const LIST: &str = "list";

#[derive(Debug, Parser)]
#[command(name = "shadowlab", version, about = "Seeded, replayable shadow-learning experiments")]
pub struct Cli {
    /// Experiment name, `validate-config` or `list`.
    pub command: String,
    /// JSON experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the master seed of the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run directory; defaults to the config's `output_dir`, then `runs/<experiment>-<hash>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest of an earlier run to replay in place.
    #[arg(long)]
    pub replay: Option<PathBuf>,
}

fn load_config(cli: &Cli) -> HarnessResult<ExperimentConfig> {
    let path = cli.config.as_deref().ok_or_else(|| HarnessError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Normalises the config through its experiment and returns the filled-in parameters.
pub fn validate(registry: &ExperimentRegistry, cfg: &ExperimentConfig) -> HarnessResult<serde_json::Value> {
    registry.get(&cfg.experiment)?.normalize(&cfg.params)
}

fn run_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| Path::new("runs").join(format!("{}-{}", cfg.experiment, &cfg.hash()[..12])))
}

pub fn dispatch(registry: &ExperimentRegistry, cli: &Cli) -> HarnessResult<Option<RunManifest>> {
    match cli.command.as_str() {
        LIST => {
            for name in registry.names() {
                println!("{name}\t{}", registry.get(name)?.description());
            }
            Ok(None)
        }
        VALIDATE => {
            let cfg = load_config(cli)?;
            let params = validate(registry, &cfg)?;
            println!("{}", serde_json::to_string_pretty(&params).unwrap_or_default());
            eprintln!("config ok: {} (hash {})", cfg.experiment, cfg.hash());
            Ok(None)
        }
        name => {
            registry.get(name)?;
            if let Some(manifest) = &cli.replay {
                let m = RunManifest::load(manifest)?;
                if m.experiment != name {
                    return Err(HarnessError::Replay(format!("manifest is for {:?}, not {name:?}", m.experiment)));
                }
                return replay(registry, manifest).map(Some);
            }
            let cfg = load_config(cli)?;
            if cfg.experiment != name {
                return Err(HarnessError::Config(format!("config is for {:?}, not {name:?}", cfg.experiment)));
            }
            let dir = run_dir(cli, &cfg);
            let m = execute(registry, &cfg, &dir, None)?;
            eprintln!("wrote {}", dir.join(MANIFEST_FILE).display());
            Ok(Some(m))
        }
    }
}

/// Parses `args` (program name first), runs, and returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(&ExperimentRegistry::default(), &cli) {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
