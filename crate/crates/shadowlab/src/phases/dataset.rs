//! Labelled shadow datasets for the SPT and topological classification tasks.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    complexity_matched_circuit, grid_edges, local_random_circuit, prepare_cluster, prepare_logical_zero, prepare_product_x,
    symmetric_random_circuit, PhaseError, PhaseResult, PrepMode, SurfaceCodeLayout, SymmetryClass,
};
use crate::rng::{derive_seed, stream};
use crate::shadows::{self, ShadowSet};
use crate::sim::{haar_single_qubit, mat, run_circuit, Mat2, NoiseModel, StateVector};

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetEntry {
    pub shadows: ShadowSet,
    /// 0 or 1; `PhaseDataset::labels` names the two classes.
    pub class: usize,
    pub generator: Value,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDataset {
    pub n_qubits: usize,
    pub labels: [String; 2],
    pub entries: Vec<DatasetEntry>,
}

impl PhaseDataset {
    pub fn classes(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.class).collect()
    }

    pub fn shadow_sets(&self) -> Vec<&ShadowSet> {
        self.entries.iter().map(|e| &e.shadows).collect()
    }

    /// Entries `0..k` and `k..` of each class, interleaved as class 0 then class 1.
    pub fn split(&self, k: usize) -> (Vec<&DatasetEntry>, Vec<&DatasetEntry>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for c in 0..2 {
            for (i, e) in self.entries.iter().filter(|e| e.class == c).enumerate() {
                if i < k {
                    train.push(e);
                } else {
                    test.push(e);
                }
            }
        }
        (train, test)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SptConfig {
    pub n: usize,
    pub symmetry: SymmetryClass,
    pub layers: usize,
    pub t: usize,
    pub per_class: usize,
    pub noise: NoiseModel,
    pub seed: u64,
}

impl SptConfig {
    pub fn new(n: usize, symmetry: SymmetryClass, seed: u64) -> Self {
        Self { n, symmetry, layers: 2, t: 100, per_class: 20, noise: NoiseModel::noiseless(), seed }
    }
}

/// Class 0: cluster state, class 1: `|+⟩^n`, each followed by a fresh symmetric circuit.
pub fn build_spt_dataset(cfg: &SptConfig) -> PhaseResult<PhaseDataset> {
    let fixed = [prepare_cluster(cfg.n)?, prepare_product_x(cfg.n)?];
    let jobs: Vec<(usize, usize)> = (0..2).flat_map(|c| (0..cfg.per_class).map(move |i| (c, i))).collect();
    let entries = jobs
        .par_iter()
        .map(|&(class, i)| {
            let label = ["spt", "trivial"][class];
            let seed = derive_seed(cfg.seed, label, i as u64);
            let mut rng = stream(cfg.seed, label, i as u64);
            let (circuit, gates) = symmetric_random_circuit(cfg.n, cfg.symmetry, cfg.layers, &mut rng)?;
            let (state, _) = run_circuit(&fixed[class], &circuit, &NoiseModel::noiseless(), &mut rng)?;
            let mut set = shadows::acquire(&state, cfg.t, &cfg.noise, &mut rng)?;
            set.meta.seed = Some(seed);
            set.meta.state_desc = format!("{label}+{}x{}", cfg.symmetry.tag(), cfg.layers);
            let generator = json!({
                "kind": "spt",
                "fixed_point": label,
                "symmetry": cfg.symmetry.tag(),
                "layers": cfg.layers,
                "brickwork": "even layers (2k,2k+1), odd layers (2k+1,2k+2 mod n)",
                "gates": gates,
            });
            Ok(DatasetEntry { shadows: set, class, generator, seed })
        })
        .collect::<PhaseResult<Vec<_>>>()?;
    Ok(PhaseDataset { n_qubits: cfg.n, labels: ["spt".into(), "trivial".into()], entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopoPreparation {
    /// `|0_L⟩` dressed with a random tensor product of single-qubit unitaries.
    Topological,
    /// `|0⟩^n` through a random circuit of matching CX count; no topological order.
    Control,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopoConfig {
    pub d_code: usize,
    pub d_lu: usize,
    pub t: usize,
    pub per_class: usize,
    pub noise: NoiseModel,
    pub seed: u64,
    pub class0: TopoPreparation,
    pub prep_mode: PrepMode,
}

impl TopoConfig {
    pub fn new(d_code: usize, d_lu: usize, seed: u64) -> Self {
        Self {
            d_code,
            d_lu,
            t: 300,
            per_class: 20,
            noise: NoiseModel::noiseless(),
            seed,
            class0: TopoPreparation::Topological,
            prep_mode: PrepMode::Protocol,
        }
    }
}

fn angles_json(us: &[Mat2]) -> Value {
    let a: Vec<[f64; 3]> = us
        .iter()
        .map(|u| {
            let (t, p, l) = mat::zyz_angles(u);
            [t, p, l]
        })
        .collect();
    json!(a)
}

/// Class 0 per `class0`, class 1: `|0⟩^n` through `d_lu` local random layers on the
/// `d × d` grid. Every entry then receives a Haar tensor-product layer applied
/// virtually on its shadow.
pub fn build_topo_dataset(cfg: &TopoConfig) -> PhaseResult<PhaseDataset> {
    let layout = SurfaceCodeLayout::new(cfg.d_code)?;
    let n = layout.n_data();
    let edges = grid_edges(cfg.d_code, cfg.d_code);
    let mut prep_rng = stream(cfg.seed, "logical-zero", 0);
    let logical_zero = prepare_logical_zero(&layout, cfg.prep_mode, &mut prep_rng)?;
    let zero = StateVector::zero(n)?;
    let jobs: Vec<(usize, usize)> = (0..2).flat_map(|c| (0..cfg.per_class).map(move |i| (c, i))).collect();
    let entries = jobs
        .par_iter()
        .map(|&(class, i)| {
            let label = match (class, cfg.class0) {
                (0, TopoPreparation::Topological) => "topological",
                (0, TopoPreparation::Control) => "control",
                _ => "trivial",
            };
            let stage = format!("{label}-dlu{}", cfg.d_lu);
            let seed = derive_seed(cfg.seed, &stage, i as u64);
            let mut rng = stream(cfg.seed, &stage, i as u64);
            let (state, generator) = match label {
                "topological" => (logical_zero.clone(), json!({"kind": "topological", "d_code": cfg.d_code})),
                "control" => {
                    let c = complexity_matched_circuit(&layout, &mut rng);
                    let (s, _) = run_circuit(&zero, &c, &NoiseModel::noiseless(), &mut rng)?;
                    (s, json!({"kind": "control", "gates": c.gate_count()}))
                }
                _ => {
                    let c = local_random_circuit(n, &edges, cfg.d_lu, &mut rng)?;
                    let (s, _) = run_circuit(&zero, &c, &NoiseModel::noiseless(), &mut rng)?;
                    (s, json!({"kind": "trivial", "d_lu": cfg.d_lu, "gates": c.gate_count()}))
                }
            };
            let raw = shadows::acquire(&state, cfg.t, &cfg.noise, &mut rng)?;
            let v: Vec<Mat2> = (0..n).map(|_| haar_single_qubit(&mut rng)).collect();
            let mut set = shadows::virtual_unitary(&raw, &v)?;
            set.meta.seed = Some(seed);
            set.meta.state_desc = stage;
            let mut generator = generator;
            generator["virtual_zyz"] = angles_json(&v);
            Ok(DatasetEntry { shadows: set, class, generator, seed })
        })
        .collect::<PhaseResult<Vec<_>>>()?;
    let first = if cfg.class0 == TopoPreparation::Topological { "topological" } else { "control" };
    Ok(PhaseDataset { n_qubits: n, labels: [first.into(), "trivial".into()], entries })
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    label: String,
    shadow_file: String,
    generator: Value,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    n_qubits: usize,
    labels: [String; 2],
    entries: Vec<ManifestEntry>,
}

/// Writes one shadow file per entry plus `manifest.json` into `dir`.
pub fn save_dataset(ds: &PhaseDataset, dir: &Path) -> PhaseResult<()> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(ds.entries.len());
    for (k, e) in ds.entries.iter().enumerate() {
        let file = format!("entry_{k:03}.jsonl");
        shadows::save(&e.shadows, &dir.join(&file))?;
        entries.push(ManifestEntry {
            label: ds.labels[e.class].clone(),
            shadow_file: file,
            generator: e.generator.clone(),
            seed: e.seed,
        });
    }
    let manifest = Manifest { n_qubits: ds.n_qubits, labels: ds.labels.clone(), entries };
    shadows::write_atomic(&dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(())
}

pub fn load_manifest(path: &Path) -> PhaseResult<PhaseDataset> {
    let manifest: Manifest = serde_json::from_slice(&std::fs::read(path)?)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let entries = manifest
        .entries
        .into_iter()
        .map(|m| {
            let class = manifest.labels.iter().position(|l| *l == m.label).ok_or_else(|| {
                PhaseError::Shadow(shadows::ShadowError::Format(format!("unknown label {:?}", m.label)))
            })?;
            let set = shadows::load(&dir.join(&m.shadow_file))?;
            if set.n_qubits != manifest.n_qubits {
                return Err(PhaseError::Shadow(shadows::ShadowError::MixedQubitCounts));
            }
            Ok(DatasetEntry { shadows: set, class, generator: m.generator, seed: m.seed })
        })
        .collect::<PhaseResult<Vec<_>>>()?;
    Ok(PhaseDataset { n_qubits: manifest.n_qubits, labels: manifest.labels, entries })
}
