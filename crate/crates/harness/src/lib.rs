//! Config-driven, seeded and replayable runs of the shadowlab experiments.
//!
//! Each experiment is a named pipeline of stages behind the [`registry::Experiment`]
//! trait. A run writes its artifacts and a [`manifest::RunManifest`] recording the
//! config hash, per-stage seeds and artifact digests, from which it can be replayed.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod output;
pub mod registry;

pub use config::ExperimentConfig;
pub use error::{HarnessError, HarnessResult};
pub use manifest::{execute, replay, RunManifest};
pub use registry::{Experiment, ExperimentRegistry, StageContext};
