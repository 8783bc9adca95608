//! Unsupervised-then-supervised SPT classification from shadow kernels.

use std::path::PathBuf;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use shadowlab::ml::{kernel_pca, svm_fit, svm_gaussian_alpha, KernelRegistry, KernelSpec, PcaEmbedding, SvmModel};
use shadowlab::phases::{
    build_spt_dataset, cluster_ising_ground, load_manifest, prepare_cluster, prepare_product_x, save_dataset, sop,
    symmetric_random_circuit, ClusterIsingSpec, DatasetEntry, PhaseDataset, SptConfig, SymmetryClass,
};
use shadowlab::rng::{derive_seed, stream};
use shadowlab::shadows::{self, KernelVariant, ShadowSet};
use shadowlab::sim::{run_circuit, NoiseModel, StateVector};

use super::{mean_std, AtStage, ShadowGram, ShadowKernelParams};
use crate::config::{check, parse_params};
use crate::error::{HarnessError, HarnessResult};
use crate::output::{num, write_json, Table};
use crate::registry::{Experiment, StageContext};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferParams {
    pub symmetry: SymmetryClass,
    pub points: usize,
    pub h1: [f64; 2],
    pub h2: [f64; 2],
    /// Points whose label changes within this distance along either axis are redrawn.
    pub margin: f64,
    /// Even string length of the order parameter used as ground truth.
    pub sop_length: usize,
    pub sop_threshold: f64,
}

impl Default for TransferParams {
    fn default() -> Self {
        Self {
            symmetry: SymmetryClass::Z2xZ2,
            points: 40,
            h1: [0.0, 1.6],
            h2: [-0.8, 1.6],
            margin: 0.05,
            sop_length: 4,
            sop_threshold: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SptParams {
    pub n: usize,
    pub t: usize,
    pub layers: usize,
    /// Depth for the no-symmetry family, deep enough for generic circuits to connect the phases.
    pub none_layers: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub symmetries: Vec<SymmetryClass>,
    pub reps: usize,
    pub noise: NoiseModel,
    pub kernel: ShadowKernelParams,
    pub svm_c: f64,
    pub sop_reps: usize,
    pub transfer: TransferParams,
}

impl Default for SptParams {
    fn default() -> Self {
        Self {
            n: 10,
            t: 100,
            layers: 2,
            none_layers: 20,
            train_per_class: 10,
            test_per_class: 10,
            symmetries: vec![SymmetryClass::Z2xZ2, SymmetryClass::Trs, SymmetryClass::None],
            reps: 10,
            noise: NoiseModel::noiseless(),
            kernel: ShadowKernelParams { variant: KernelVariant::OffDiagonal, ..ShadowKernelParams::default() },
            svm_c: 1.0,
            sop_reps: 300,
            transfer: TransferParams::default(),
        }
    }
}

impl SptParams {
    fn validate(&self) -> HarnessResult<()> {
        check(self.n >= 4 && self.n.is_multiple_of(2) && self.n <= 14, "n must be even and in [4, 14]")?;
        check(self.t >= 1, "t must be positive")?;
        check(self.train_per_class >= 2 && self.test_per_class >= 1, "need >= 2 training and >= 1 test state per class")?;
        check(!self.symmetries.is_empty(), "symmetries must not be empty")?;
        check(self.reps >= 1, "reps must be positive")?;
        self.noise.validate().map_err(|e| HarnessError::Config(format!("noise: {e}")))?;
        self.kernel.validate()?;
        check(self.svm_c > 0.0, "svm_c must be positive")?;
        let tr = &self.transfer;
        check(self.symmetries.contains(&tr.symmetry), "transfer.symmetry must be one of symmetries")?;
        check(tr.h1[0] <= tr.h1[1] && tr.h2[0] <= tr.h2[1], "transfer ranges must be ordered")?;
        check(tr.margin >= 0.0, "transfer.margin must be non-negative")?;
        check(
            tr.sop_length >= 2 && tr.sop_length.is_multiple_of(2) && tr.sop_length < self.n,
            "transfer.sop_length must be even and below n",
        )
    }

    fn layers_for(&self, sym: SymmetryClass) -> usize {
        if sym == SymmetryClass::None {
            self.none_layers
        } else {
            self.layers
        }
    }

    fn dataset_dir(&self, sym: SymmetryClass, rep: usize) -> String {
        format!("datasets/{}/rep{rep:02}", sym.tag())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryResult {
    pub symmetry: SymmetryClass,
    /// Test accuracy per repetition.
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferResult {
    pub points: usize,
    /// Draws rejected for lying within the margin of a label change.
    pub rejected: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SptReport {
    pub n: usize,
    pub symmetries: Vec<SymmetryResult>,
    #[serde(default)]
    pub transfer: Option<TransferResult>,
}

/// Kernel PCA to two dimensions followed by a Gaussian SVM in the embedding.
pub struct SptClassifier {
    gram: ShadowGram,
    pca: PcaEmbedding,
    svm: SvmModel,
    registry: KernelRegistry,
}

/// `+1` for the SPT class, `−1` for trivial.
fn label(class: usize) -> f64 {
    if class == 0 {
        1.0
    } else {
        -1.0
    }
}

impl SptClassifier {
    pub fn fit(train: &[&DatasetEntry], kernel: ShadowKernelParams, c: f64) -> Result<Self, String> {
        let sets: Vec<&ShadowSet> = train.iter().map(|e| &e.shadows).collect();
        let gram = ShadowGram::new(&sets, kernel).map_err(|e| e.to_string())?;
        let pca = kernel_pca(&gram.normalized, 2, true).map_err(|e| e.to_string())?;
        let alpha = svm_gaussian_alpha(&pca.embedding).map_err(|e| e.to_string())?;
        let labels: Vec<f64> = train.iter().map(|e| label(e.class)).collect();
        let registry = KernelRegistry::default();
        let svm = svm_fit(&registry, &KernelSpec::gaussian(alpha), &pca.embedding, &labels, c).map_err(|e| e.to_string())?;
        Ok(Self { gram, pca, svm, registry })
    }

    pub fn training_embedding(&self) -> &[Vec<f64>] {
        &self.pca.embedding
    }

    pub fn embed(&self, sets: &[&ShadowSet]) -> Result<Vec<Vec<f64>>, String> {
        let k = self.gram.cross(sets).map_err(|e| e.to_string())?;
        (0..k.nrows())
            .map(|i| self.pca.project(&k.row(i).iter().copied().collect::<Vec<_>>()).map_err(|e| e.to_string()))
            .collect()
    }

    pub fn predict(&self, embedded: &[Vec<f64>]) -> Result<Vec<f64>, String> {
        self.svm.predict(&self.registry, embedded).map_err(|e| e.to_string())
    }

    pub fn svm(&self) -> &SvmModel {
        &self.svm
    }
}

pub struct ClassifySpt;

const DATASETS: &str = "datasets";
const CLASSIFY: &str = "classify";
const SOP: &str = "sop";
const TRANSFER: &str = "transfer";

impl Experiment for ClassifySpt {
    fn name(&self) -> &'static str {
        "classify-spt"
    }

    fn description(&self) -> &'static str {
        "SPT versus trivial classification of symmetric random-circuit states, plus cluster-Ising transfer"
    }

    fn normalize(&self, params: &Value) -> HarnessResult<Value> {
        let p: SptParams = parse_params(params)?;
        p.validate()?;
        serde_json::to_value(p).map_err(|e| HarnessError::Config(e.to_string()))
    }

    fn stages(&self) -> &'static [&'static str] {
        &[DATASETS, CLASSIFY, SOP, TRANSFER]
    }

    fn run_stage(&self, ctx: &StageContext) -> HarnessResult<Vec<PathBuf>> {
        let p: SptParams = parse_params(&ctx.params)?;
        match ctx.stage.as_str() {
            DATASETS => datasets_stage(&p, ctx),
            CLASSIFY => classify_stage(&p, ctx),
            SOP => sop_stage(&p, ctx),
            TRANSFER => transfer_stage(&p, ctx),
            other => Err(HarnessError::stage(other, "unknown stage")),
        }
    }
}

fn datasets_stage(p: &SptParams, ctx: &StageContext) -> HarnessResult<Vec<PathBuf>> {
    let mut artifacts = Vec::new();
    for &sym in &p.symmetries {
        for rep in 0..p.reps {
            let cfg = SptConfig {
                n: p.n,
                symmetry: sym,
                layers: p.layers_for(sym),
                t: p.t,
                per_class: p.train_per_class + p.test_per_class,
                noise: p.noise,
                seed: derive_seed(ctx.seed, sym.tag(), rep as u64),
            };
            let ds = build_spt_dataset(&cfg).at(ctx)?;
            let dir = ctx.path(&p.dataset_dir(sym, rep));
            save_dataset(&ds, &dir).at(ctx)?;
            artifacts.push(dir.join("manifest.json"));
            artifacts.extend((0..ds.entries.len()).map(|k| dir.join(format!("entry_{k:03}.jsonl"))));
        }
    }
    Ok(artifacts)
}

fn load(p: &SptParams, ctx: &StageContext, sym: SymmetryClass, rep: usize) -> HarnessResult<PhaseDataset> {
    load_manifest(&ctx.path(&p.dataset_dir(sym, rep)).join("manifest.json")).at(ctx)
}

fn classify_stage(p: &SptParams, ctx: &StageContext) -> HarnessResult<Vec<PathBuf>> {
    let mut embed = Table::new(&["symmetry", "rep", "split", "entry", "label", "pc1", "pc2", "predicted"]);
    let mut acc_table = Table::new(&["symmetry", "rep", "accuracy"]);
    let mut boundaries = Vec::new();
    let mut results = Vec::new();
    for &sym in &p.symmetries {
        let mut accuracies = Vec::with_capacity(p.reps);
        for rep in 0..p.reps {
            let ds = load(p, ctx, sym, rep)?;
            let (train, test) = ds.split(p.train_per_class);
            let model = SptClassifier::fit(&train, p.kernel, p.svm_c).at(ctx)?;
            let train_pred = model.predict(model.training_embedding()).at(ctx)?;
            let test_sets: Vec<&ShadowSet> = test.iter().map(|e| &e.shadows).collect();
            let test_emb = model.embed(&test_sets).at(ctx)?;
            let test_pred = model.predict(&test_emb).at(ctx)?;
            let correct = test.iter().zip(&test_pred).filter(|(e, &y)| label(e.class) == y).count();
            let acc = correct as f64 / test.len() as f64;
            accuracies.push(acc);
            acc_table.push(vec![sym.tag().into(), rep.to_string(), num(acc)]);
            for (split, entries, emb, pred) in [
                ("train", &train, model.training_embedding(), &train_pred),
                ("test", &test, &test_emb[..], &test_pred),
            ] {
                for (k, ((e, x), y)) in entries.iter().zip(emb).zip(pred).enumerate() {
                    embed.push(vec![
                        sym.tag().into(),
                        rep.to_string(),
                        split.into(),
                        k.to_string(),
                        num(label(e.class)),
                        num(x[0]),
                        num(x.get(1).copied().unwrap_or(0.0)),
                        num(*y),
                    ]);
                }
            }
            boundaries.push(serde_json::json!({"symmetry": sym.tag(), "rep": rep, "svm": model.svm()}));
        }
        let (mean_accuracy, std_accuracy) = mean_std(&accuracies);
        results.push(SymmetryResult { symmetry: sym, accuracies, mean_accuracy, std_accuracy });
    }
    let report = SptReport { n: p.n, symmetries: results, transfer: None };
    let svm_path = ctx.path("svm_boundaries.json");
    write_json(&svm_path, &boundaries)?;
    let report_path = ctx.path("classify_report.json");
    write_json(&report_path, &report)?;
    Ok(vec![
        embed.write(&ctx.path("embeddings.csv"), ctx.master_seed, &ctx.config_hash)?,
        acc_table.write(&ctx.path("accuracy.csv"), ctx.master_seed, &ctx.config_hash)?,
        svm_path,
        report_path,
    ])
}

/// String order parameter `S(0, L)` for every even `L` below `n`, mean and standard
/// deviation over fresh symmetric circuits.
fn sop_stage(p: &SptParams, ctx: &StageContext) -> HarnessResult<Vec<PathBuf>> {
    let fixed = [prepare_cluster(p.n).at(ctx)?, prepare_product_x(p.n).at(ctx)?];
    let lengths: Vec<usize> = (2..p.n).step_by(2).collect();
    let mut table = Table::new(&["symmetry", "class", "length", "mean", "std", "reps"]);
    for &sym in &p.symmetries {
        for (class, start) in ["spt", "trivial"].iter().zip(&fixed) {
            let label = format!("sop-{}-{class}", sym.tag());
            let values = (0..p.sop_reps)
                .into_par_iter()
                .map(|r| {
                    let mut rng = stream(ctx.seed, &label, r as u64);
                    let (c, _) = symmetric_random_circuit(p.n, sym, p.layers_for(sym), &mut rng).map_err(|e| e.to_string())?;
                    let (s, _) = run_circuit(start, &c, &NoiseModel::noiseless(), &mut rng).map_err(|e| e.to_string())?;
                    lengths.iter().map(|&l| sop(&s, 0, l).map_err(|e| e.to_string())).collect::<Result<Vec<f64>, String>>()
                })
                .collect::<Result<Vec<_>, String>>()
                .at(ctx)?;
            for (li, &l) in lengths.iter().enumerate() {
                let col: Vec<f64> = values.iter().map(|v| v[li]).collect();
                let (m, s) = mean_std(&col);
                table.push(vec![sym.tag().into(), class.to_string(), l.to_string(), num(m), num(s), p.sop_reps.to_string()]);
            }
        }
    }
    Ok(vec![table.write(&ctx.path("sop.csv"), ctx.master_seed, &ctx.config_hash)?])
}

fn hci_ground(n: usize, h1: f64, h2: f64) -> Result<StateVector, String> {
    cluster_ising_ground(&ClusterIsingSpec::new(n, h1, h2)).map(|g| g.state).map_err(|e| e.to_string())
}

/// Ground-truth phase of the cluster-Ising ground state: SPT when `S(0, L)` exceeds the threshold.
fn hci_is_spt(p: &SptParams, h1: f64, h2: f64) -> Result<(bool, f64, StateVector), String> {
    let s = hci_ground(p.n, h1, h2)?;
    let v = sop(&s, 0, p.transfer.sop_length).map_err(|e| e.to_string())?;
    Ok((v > p.transfer.sop_threshold, v, s))
}

fn transfer_stage(p: &SptParams, ctx: &StageContext) -> HarnessResult<Vec<PathBuf>> {
    let tr = &p.transfer;
    let ds = load(p, ctx, tr.symmetry, 0)?;
    let (train, _) = ds.split(p.train_per_class);
    let model = SptClassifier::fit(&train, p.kernel, p.svm_c).at(ctx)?;

    let mut rng = stream(ctx.seed, "hci-sample", 0);
    let mut accepted = Vec::new();
    let mut rejected = 0;
    let max_draws = 100 * tr.points.max(1);
    while accepted.len() < tr.points {
        if accepted.len() + rejected >= max_draws {
            return Err(HarnessError::stage(TRANSFER, format!("only {} of {} points outside the margin", accepted.len(), tr.points)));
        }
        let h1 = rng.gen_range(tr.h1[0]..=tr.h1[1]);
        let h2 = rng.gen_range(tr.h2[0]..=tr.h2[1]);
        let (spt, value, state) = hci_is_spt(p, h1, h2).at(ctx)?;
        let d = tr.margin;
        let mut near_boundary = false;
        if d > 0.0 {
            for (a, b) in [(h1 - d, h2), (h1 + d, h2), (h1, h2 - d), (h1, h2 + d)] {
                if hci_is_spt(p, a, b).at(ctx)?.0 != spt {
                    near_boundary = true;
                    break;
                }
            }
        }
        if near_boundary {
            rejected += 1;
        } else {
            accepted.push((h1, h2, spt, value, state));
        }
    }
    let sets = accepted
        .iter()
        .enumerate()
        .map(|(k, (.., s))| {
            let mut r = stream(ctx.seed, "hci-shadow", k as u64);
            shadows::acquire(s, p.t, &p.noise, &mut r)
        })
        .collect::<Result<Vec<_>, _>>()
        .at(ctx)?;
    let refs: Vec<&ShadowSet> = sets.iter().collect();
    let emb = model.embed(&refs).at(ctx)?;
    let pred = model.predict(&emb).at(ctx)?;
    let mut table = Table::new(&["h1", "h2", "sop", "truth", "predicted", "pc1", "pc2"]);
    let mut correct = 0;
    for ((h1, h2, spt, value, _), (x, y)) in accepted.iter().zip(emb.iter().zip(&pred)) {
        let truth = if *spt { 1.0 } else { -1.0 };
        if truth == *y {
            correct += 1;
        }
        table.push(vec![num(*h1), num(*h2), num(*value), num(truth), num(*y), num(x[0]), num(x[1])]);
    }
    let result = TransferResult { points: accepted.len(), rejected, accuracy: correct as f64 / accepted.len().max(1) as f64 };
    let classify: SptReport = crate::output::read_json(&ctx.path("classify_report.json"))?;
    let report = SptReport { transfer: Some(result), ..classify };
    let path = ctx.path("report.json");
    write_json(&path, &report)?;
    Ok(vec![table.write(&ctx.path("hci_transfer.csv"), ctx.master_seed, &ctx.config_hash)?, path])
}
