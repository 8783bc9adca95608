//! Linear classifier extraction on Renyi-entropy features, against the TEE rule.

use std::path::PathBuf;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use shadowlab::features::{
    calibrate_response, evaluate_classifiers, extraction_state, feature_pair_measured, fit_linear_classifier,
    logical_zero_d3, FeatureVector, LinearClassifier, ResponseMatrix, DEFAULT_WINDOW, N_FEATURES,
};
use shadowlab::rng::stream;
use shadowlab::sim::NoiseModel;

use super::{mean_std, AtStage};
use crate::config::{check, parse_params};
use crate::error::{HarnessError, HarnessResult};
use crate::output::{num, parse_f64, read_json, read_table, write_json, Table};
use crate::registry::{Experiment, StageContext};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractParams {
    /// Four data qubits of the 3×3 patch, 0-indexed row-major.
    pub window: [usize; 4],
    /// Shots per tomography setting.
    pub shots: u64,
    pub calibration_shots: u64,
    pub noise: NoiseModel,
    pub train_per_class: usize,
    pub d_lu: usize,
    pub svm_c: f64,
    pub instances: usize,
    /// States per phase in each test instance.
    pub eval_per_class: usize,
    pub epsilon: f64,
}

impl Default for ExtractParams {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            shots: 50_000,
            calibration_shots: 50_000,
            noise: NoiseModel { p_m: 0.05, p_m01: Some(0.02), p_m10: Some(0.05), ..NoiseModel::default() },
            train_per_class: 10,
            d_lu: 2,
            svm_c: 1.0,
            instances: 100,
            eval_per_class: 3000,
            epsilon: 0.1,
        }
    }
}

impl ExtractParams {
    fn validate(&self) -> HarnessResult<()> {
        let mut w = self.window;
        w.sort_unstable();
        check(w.windows(2).all(|p| p[0] < p[1]) && w[3] < 9, "window must be 4 distinct qubits in 0..9")?;
        check(self.shots > 0 && self.calibration_shots > 0, "shot counts must be positive")?;
        self.noise.validate().map_err(|e| HarnessError::Config(format!("noise: {e}")))?;
        check(self.train_per_class >= 1, "train_per_class must be positive")?;
        check(self.d_lu <= 5, "d_lu must lie in [0, 5]")?;
        check(self.svm_c > 0.0, "svm_c must be positive")?;
        check(self.instances >= 1 && self.eval_per_class >= 1, "instances and eval_per_class must be positive")?;
        check(self.epsilon >= 0.0, "epsilon must be non-negative")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classifiers {
    pub raw: LinearClassifier,
    pub mem: LinearClassifier,
    pub tee: LinearClassifier,
    pub train_accuracy_raw: f64,
    pub train_accuracy_mem: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub classifier: String,
    pub mean_error: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractReport {
    pub classifiers: Classifiers,
    pub errors: Vec<ErrorSummary>,
    pub instances: usize,
    pub states_per_instance: usize,
}

impl ExtractReport {
    pub fn mean_error(&self, name: &str) -> Option<f64> {
        self.errors.iter().find(|e| e.classifier == name).map(|e| e.mean_error)
    }
}

pub struct ExtractClassifier;

const CALIBRATE: &str = "calibrate";
const ACQUIRE: &str = "acquire";
const TRAIN: &str = "train";
const EVALUATE: &str = "evaluate";

impl Experiment for ExtractClassifier {
    fn name(&self) -> &'static str {
        "extract-classifier"
    }

    fn description(&self) -> &'static str {
        "linear SVM on subsystem Renyi entropies, raw versus readout-mitigated, against the TEE classifier"
    }

    fn normalize(&self, params: &Value) -> HarnessResult<Value> {
        let p: ExtractParams = parse_params(params)?;
        p.validate()?;
        serde_json::to_value(p).map_err(|e| HarnessError::Config(e.to_string()))
    }

    fn stages(&self) -> &'static [&'static str] {
        &[CALIBRATE, ACQUIRE, TRAIN, EVALUATE]
    }

    fn run_stage(&self, ctx: &StageContext) -> HarnessResult<Vec<PathBuf>> {
        let p: ExtractParams = parse_params(&ctx.params)?;
        match ctx.stage.as_str() {
            CALIBRATE => calibrate_stage(&p, ctx),
            ACQUIRE => acquire_stage(&p, ctx),
            TRAIN => train_stage(&p, ctx),
            EVALUATE => evaluate_stage(&p, ctx),
            other => Err(HarnessError::stage(other, "unknown stage")),
        }
    }
}

fn calibrate_stage(p: &ExtractParams, ctx: &StageContext) -> HarnessResult<Vec<PathBuf>> {
    let mut rng = stream(ctx.seed, "calibration", 0);
    let resp = calibrate_response(4, &p.noise, p.calibration_shots, &mut rng).at(ctx)?;
    let dim = resp.r.nrows();
    let header: Vec<String> = std::iter::once("outcome".to_string()).chain((0..dim).map(|j| format!("prepared{j}"))).collect();
    let mut t = Table::new(&header);
    for i in 0..dim {
        let mut row = vec![i.to_string()];
        row.extend((0..dim).map(|j| num(resp.r[(i, j)])));
        t.push(row);
    }
    Ok(vec![t.write(&ctx.path("response.csv"), ctx.master_seed, &ctx.config_hash)?])
}

fn load_response(ctx: &StageContext) -> HarnessResult<ResponseMatrix> {
    let (_, rows) = read_table(&ctx.path("response.csv"))?;
    let dim = rows.len();
    let mut r = DMatrix::zeros(dim, dim);
    for (i, row) in rows.iter().enumerate() {
        for j in 0..dim {
            r[(i, j)] = parse_f64(&row[j + 1])?;
        }
    }
    Ok(ResponseMatrix { k: 4, r })
}

fn feature_header() -> Vec<String> {
    let mut h = vec!["state".to_string(), "label".to_string(), "mitigation".to_string()];
    h.extend((0..N_FEATURES).map(|i| format!("phi{i}")));
    h
}

fn acquire_stage(p: &ExtractParams, ctx: &StageContext) -> HarnessResult<Vec<PathBuf>> {
    let resp = load_response(ctx)?;
    let l0 = logical_zero_d3().at(ctx)?;
    let mut rng = stream(ctx.seed, "training-states", 0);
    let mut t = Table::new(&feature_header());
    let mut k = 0;
    for topo in [true, false] {
        for _ in 0..p.train_per_class {
            let s = extraction_state(topo, &l0, p.d_lu, &mut rng).at(ctx)?;
            let (raw, mem) = feature_pair_measured(&s, &p.window, p.shots, &p.noise, &resp, &mut rng).at(ctx)?;
            let label = if topo { 1.0 } else { -1.0 };
            for (name, phi) in [("raw", raw), ("mem", mem)] {
                let mut row = vec![k.to_string(), num(label), name.to_string()];
                row.extend(phi.iter().map(|v| num(*v)));
                t.push(row);
            }
            k += 1;
        }
    }
    Ok(vec![t.write(&ctx.path("features.csv"), ctx.master_seed, &ctx.config_hash)?])
}

fn train_stage(p: &ExtractParams, ctx: &StageContext) -> HarnessResult<Vec<PathBuf>> {
    let (_, rows) = read_table(&ctx.path("features.csv"))?;
    let mut sets: [(Vec<FeatureVector>, Vec<f64>); 2] = Default::default();
    for row in &rows {
        let which = if row[2] == "raw" { 0 } else { 1 };
        let mut phi = [0.0; N_FEATURES];
        for (i, v) in phi.iter_mut().enumerate() {
            *v = parse_f64(&row[3 + i])?;
        }
        sets[which].0.push(phi);
        sets[which].1.push(parse_f64(&row[1])?);
    }
    let (raw, acc_raw) = fit_linear_classifier(&sets[0].0, &sets[0].1, p.svm_c).at(ctx)?;
    let (mem, acc_mem) = fit_linear_classifier(&sets[1].0, &sets[1].1, p.svm_c).at(ctx)?;
    let c = Classifiers { raw, mem, tee: LinearClassifier::tee(), train_accuracy_raw: acc_raw, train_accuracy_mem: acc_mem };
    let path = ctx.path("classifiers.json");
    write_json(&path, &c)?;
    Ok(vec![path])
}

fn evaluate_stage(p: &ExtractParams, ctx: &StageContext) -> HarnessResult<Vec<PathBuf>> {
    let c: Classifiers = read_json(&ctx.path("classifiers.json"))?;
    let names = ["ml_raw", "ml_mem", "tee"];
    let errs = evaluate_classifiers(
        &[c.raw.clone(), c.mem.clone(), c.tee.clone()],
        p.instances,
        p.eval_per_class,
        p.d_lu,
        p.epsilon,
        &p.window,
        ctx.seed,
    )
    .at(ctx)?;
    let mut t = Table::new(&["instance", "ml_raw", "ml_mem", "tee"]);
    for i in 0..p.instances {
        t.push(vec![i.to_string(), num(errs[0][i]), num(errs[1][i]), num(errs[2][i])]);
    }
    let errors = names
        .iter()
        .zip(&errs)
        .map(|(name, e)| {
            let (m, s) = mean_std(e);
            ErrorSummary { classifier: name.to_string(), mean_error: m, std_error: s }
        })
        .collect();
    let report = ExtractReport { classifiers: c, errors, instances: p.instances, states_per_instance: 2 * p.eval_per_class };
    let path = ctx.path("report.json");
    write_json(&path, &report)?;
    Ok(vec![t.write(&ctx.path("errors.csv"), ctx.master_seed, &ctx.config_hash)?, path])
}
