//! Unsupervised separation of surface-code states from trivial states.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use shadowlab::ml::kernel_pca;
use shadowlab::phases::{
    build_topo_dataset, load_manifest, save_dataset, PrepMode, SurfaceCodeLayout, TopoConfig, TopoPreparation,
};
use shadowlab::rng::derive_seed;
use shadowlab::shadows::{KernelVariant, ShadowSet};
use shadowlab::sim::NoiseModel;

use super::{inversions, separation_margin, AtStage, ShadowGram, ShadowKernelParams};
use crate::config::{check, parse_params};
use crate::error::{HarnessError, HarnessResult};
use crate::output::{num, write_json, Table};
use crate::registry::{Experiment, StageContext};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopoParams {
    pub d_code: usize,
    pub t: usize,
    pub per_class: usize,
    pub d_lu: Vec<usize>,
    pub noise: NoiseModel,
    pub kernel: ShadowKernelParams,
    /// Also run the family without topological order.
    pub control: bool,
    pub prep_mode: PrepMode,
}

impl Default for TopoParams {
    fn default() -> Self {
        Self {
            d_code: 3,
            t: 300,
            per_class: 10,
            d_lu: vec![0, 1, 2, 3],
            noise: NoiseModel::noiseless(),
            kernel: ShadowKernelParams { variant: KernelVariant::OffDiagonal, ..ShadowKernelParams::default() },
            control: true,
            prep_mode: PrepMode::Protocol,
        }
    }
}

impl TopoParams {
    fn validate(&self) -> HarnessResult<()> {
        SurfaceCodeLayout::new(self.d_code).map_err(|e| HarnessError::Config(format!("d_code: {e}")))?;
        check(self.d_code <= 3, "d_code above 3 exceeds the statevector budget")?;
        check(self.t >= 1 && self.per_class >= 1, "t and per_class must be positive")?;
        check(!self.d_lu.is_empty() && self.d_lu.iter().all(|&d| d <= 5), "d_lu entries must lie in [0, 5]")?;
        self.noise.validate().map_err(|e| HarnessError::Config(format!("noise: {e}")))?;
        self.kernel.validate()
    }

    fn families(&self) -> Vec<TopoPreparation> {
        let mut f = vec![TopoPreparation::Topological];
        if self.control {
            f.push(TopoPreparation::Control);
        }
        f
    }
}

fn family_tag(f: TopoPreparation) -> &'static str {
    match f {
        TopoPreparation::Topological => "topological",
        TopoPreparation::Control => "control",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginRow {
    pub d_lu: usize,
    /// Positive when the two classes do not overlap on the first principal axis.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyResult {
    pub family: String,
    pub margins: Vec<MarginRow>,
    /// Number of increases of the margin along the `d_lu` sweep.
    pub inversions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopoReport {
    pub d_code: usize,
    pub families: Vec<FamilyResult>,
}

impl TopoReport {
    pub fn family(&self, name: &str) -> Option<&FamilyResult> {
        self.families.iter().find(|f| f.family == name)
    }
}

pub struct ClassifyTopo;

const DATASETS: &str = "datasets";
const EMBED: &str = "embed";

impl Experiment for ClassifyTopo {
    fn name(&self) -> &'static str {
        "classify-topo"
    }

    fn description(&self) -> &'static str {
        "first-principal-axis separation of surface-code and trivial states across local-unitary depth"
    }

    fn normalize(&self, params: &Value) -> HarnessResult<Value> {
        let p: TopoParams = parse_params(params)?;
        p.validate()?;
        serde_json::to_value(p).map_err(|e| HarnessError::Config(e.to_string()))
    }

    fn stages(&self) -> &'static [&'static str] {
        &[DATASETS, EMBED]
    }

    fn run_stage(&self, ctx: &StageContext) -> HarnessResult<Vec<PathBuf>> {
        let p: TopoParams = parse_params(&ctx.params)?;
        match ctx.stage.as_str() {
            DATASETS => datasets_stage(&p, ctx),
            EMBED => embed_stage(&p, ctx),
            other => Err(HarnessError::stage(other, "unknown stage")),
        }
    }
}

fn dataset_dir(f: TopoPreparation, d_lu: usize) -> String {
    format!("datasets/{}/dlu{d_lu}", family_tag(f))
}

fn datasets_stage(p: &TopoParams, ctx: &StageContext) -> HarnessResult<Vec<PathBuf>> {
    let mut artifacts = Vec::new();
    for f in p.families() {
        for &d in &p.d_lu {
            let cfg = TopoConfig {
                d_code: p.d_code,
                d_lu: d,
                t: p.t,
                per_class: p.per_class,
                noise: p.noise,
                seed: derive_seed(ctx.seed, family_tag(f), d as u64),
                class0: f,
                prep_mode: p.prep_mode,
            };
            let ds = build_topo_dataset(&cfg).at(ctx)?;
            let dir = ctx.path(&dataset_dir(f, d));
            save_dataset(&ds, &dir).at(ctx)?;
            artifacts.push(dir.join("manifest.json"));
            artifacts.extend((0..ds.entries.len()).map(|k| dir.join(format!("entry_{k:03}.jsonl"))));
        }
    }
    Ok(artifacts)
}

fn embed_stage(p: &TopoParams, ctx: &StageContext) -> HarnessResult<Vec<PathBuf>> {
    let mut proj = Table::new(&["family", "d_lu", "entry", "class", "pc1"]);
    let mut margins_table = Table::new(&["family", "d_lu", "margin"]);
    let mut families = Vec::new();
    for f in p.families() {
        let mut margins = Vec::new();
        for &d in &p.d_lu {
            let ds = load_manifest(&ctx.path(&dataset_dir(f, d)).join("manifest.json")).at(ctx)?;
            let sets: Vec<&ShadowSet> = ds.entries.iter().map(|e| &e.shadows).collect();
            let gram = ShadowGram::new(&sets, p.kernel).at(ctx)?;
            let pca = kernel_pca(&gram.normalized, 1, true).at(ctx)?;
            let mut by_class: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
            for (k, (e, x)) in ds.entries.iter().zip(&pca.embedding).enumerate() {
                by_class[e.class].push(x[0]);
                proj.push(vec![family_tag(f).into(), d.to_string(), k.to_string(), ds.labels[e.class].clone(), num(x[0])]);
            }
            let margin = separation_margin(&by_class[0], &by_class[1]);
            margins_table.push(vec![family_tag(f).into(), d.to_string(), num(margin)]);
            margins.push(MarginRow { d_lu: d, margin });
        }
        let series: Vec<f64> = margins.iter().map(|m| m.margin).collect();
        families.push(FamilyResult { family: family_tag(f).into(), inversions: inversions(&series), margins });
    }
    let report = TopoReport { d_code: p.d_code, families };
    let path = ctx.path("report.json");
    write_json(&path, &report)?;
    Ok(vec![
        proj.write(&ctx.path("projections.csv"), ctx.master_seed, &ctx.config_hash)?,
        margins_table.write(&ctx.path("margins.csv"), ctx.master_seed, &ctx.config_hash)?,
        path,
    ])
}
