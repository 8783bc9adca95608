//! Ground-state correlation prediction for random free-fermion chains.

use std::path::PathBuf;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use shadowlab::fermion::{
    self, build_hopping, from_upper_triangle, ground_correlation, upper_triangle, EstimateOptions, HoppingSpec,
    MitigationFlags,
};
use shadowlab::ml::{gaussian_alpha, krr_fit, rmse, select_lambda, KernelRegistry, KernelSpec, KrrModel, LAMBDA_GRID};
use shadowlab::rng::{derive_seed, stream};
use shadowlab::sim::NoiseModel;

use super::{fit_slope, AtStage};
use crate::config::{check, parse_params};
use crate::error::{HarnessError, HarnessResult};
use crate::output::{num, parse_f64, read_table, write_atomic, write_json, Table};
use crate::registry::{Experiment, StageContext};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundStateParams {
    pub n: usize,
    pub n_data: usize,
    pub n_test: usize,
    pub shots: u64,
    pub trajectories: usize,
    /// Exact Born probabilities instead of sampled shots.
    pub exact: bool,
    pub noise: NoiseModel,
    pub flags: MitigationFlags,
    pub n_sweep: Vec<usize>,
    /// Fraction of each training subset held out to choose λ.
    pub holdout: f64,
    /// A Gaussian kernel without `alpha` gets it from the training inputs.
    pub kernels: Vec<KernelSpec>,
    pub lambda_grid: Vec<f64>,
    pub ssh_v: f64,
    pub ssh_w: Vec<f64>,
}

impl Default for GroundStateParams {
    fn default() -> Self {
        Self {
            n: 12,
            n_data: 200,
            n_test: 1000,
            shots: 20_000,
            trajectories: 100,
            exact: false,
            noise: NoiseModel { p_single: 0.001, p_two: 0.01, p_m: 0.01, ..NoiseModel::default() },
            flags: MitigationFlags::all(),
            n_sweep: vec![25, 50, 100, 200],
            holdout: 0.2,
            kernels: vec![KernelSpec::new("gaussian"), KernelSpec::modified_dirichlet()],
            lambda_grid: LAMBDA_GRID.to_vec(),
            ssh_v: 1.0,
            ssh_w: (1..=7).map(|k| 0.25 * k as f64).collect(),
        }
    }
}

impl GroundStateParams {
    fn validate(&self) -> HarnessResult<()> {
        check(self.n >= 4 && self.n.is_multiple_of(2) && self.n <= 16, "n must be even and in [4, 16]")?;
        check(self.n_data >= 5, "n_data must be at least 5")?;
        check(self.n_test >= 1, "n_test must be positive")?;
        check(self.exact || self.shots > 0, "shots must be positive unless exact")?;
        check(self.exact || self.trajectories > 0, "trajectories must be positive unless exact")?;
        self.noise.validate().map_err(|e| HarnessError::Config(format!("noise: {e}")))?;
        check(!self.n_sweep.is_empty(), "n_sweep must not be empty")?;
        for &k in &self.n_sweep {
            check((5..=self.n_data).contains(&k), format!("n_sweep entry {k} outside [5, n_data]"))?;
        }
        check(self.holdout > 0.0 && self.holdout < 1.0, "holdout must lie in (0, 1)")?;
        check(!self.kernels.is_empty(), "kernels must not be empty")?;
        let reg = KernelRegistry::default();
        for k in &self.kernels {
            check(reg.names().contains(&k.name), format!("unknown kernel {:?}", k.name))?;
        }
        check(!self.lambda_grid.is_empty(), "lambda_grid must not be empty")?;
        check(self.lambda_grid.iter().all(|&l| l >= 0.0 && l.is_finite()), "lambda_grid entries must be >= 0")?;
        check(self.ssh_v.is_finite() && self.ssh_w.iter().all(|w| w.is_finite()), "ssh values must be finite")
    }

    fn n_pairs(&self) -> usize {
        self.n * (self.n + 1) / 2
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_data: usize,
    pub lambda: f64,
    pub rmse_train: f64,
    pub rmse_test: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelResult {
    pub kernel: KernelSpec,
    pub sweep: Vec<SweepRow>,
    /// Test RMSE at the largest training size.
    pub test_rmse: f64,
    /// Slope of `1/RMSE` against `ln N_data`.
    pub inv_rmse_slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SshRow {
    pub kernel: String,
    pub w: f64,
    pub edge_exact: f64,
    pub edge_predicted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictReport {
    pub n: usize,
    pub n_data: usize,
    pub n_test: usize,
    /// Training targets against exact `C`, without and with mitigation.
    pub train_rmse_raw: f64,
    pub train_rmse_mitigated: f64,
    pub kernels: Vec<KernelResult>,
    pub ssh: Vec<SshRow>,
    /// Largest `|predicted − exact|` edge correlation, first kernel.
    pub ssh_max_error: f64,
    /// Edge correlation at `w = 1.5` minus at `w = 0.5`, when both are in the sweep.
    pub ssh_step_predicted: Option<f64>,
    pub ssh_step_exact: Option<f64>,
}

pub struct PredictGroundState;

const ACQUIRE: &str = "acquire";
const TRAIN: &str = "train";

impl Experiment for PredictGroundState {
    fn name(&self) -> &'static str {
        "predict-ground-state"
    }

    fn description(&self) -> &'static str {
        "KRR prediction of free-fermion correlation matrices from simulated, mitigated measurements"
    }

    fn normalize(&self, params: &Value) -> HarnessResult<Value> {
        let p: GroundStateParams = parse_params(params)?;
        p.validate()?;
        serde_json::to_value(p).map_err(|e| HarnessError::Config(e.to_string()))
    }

    fn stages(&self) -> &'static [&'static str] {
        &[ACQUIRE, TRAIN]
    }

    fn run_stage(&self, ctx: &StageContext) -> HarnessResult<Vec<PathBuf>> {
        let p: GroundStateParams = parse_params(&ctx.params)?;
        match ctx.stage.as_str() {
            ACQUIRE => acquire_stage(&p, ctx),
            TRAIN => train_stage(&p, ctx),
            other => Err(HarnessError::stage(other, "unknown stage")),
        }
    }
}

struct TrainingPoint {
    x: Vec<f64>,
    mitigated: Vec<f64>,
    raw: Vec<f64>,
    exact: Vec<f64>,
    retention: f64,
}

fn simulate_point(p: &GroundStateParams, master: u64, i: usize) -> fermion::FermionResult<TrainingPoint> {
    let mut rng = stream(master, "train", i as u64);
    let spec = HoppingSpec::uniform(p.n, &mut rng, Some(derive_seed(master, "train", i as u64)))?;
    let exact = ground_correlation(&build_hopping(&spec)?, p.n / 2)?.c;
    let opts = EstimateOptions { shots: p.shots, trajectories: p.trajectories, exact: p.exact, flags: p.flags, ..Default::default() };
    let data = fermion::acquire(&spec, &opts, &p.noise, &mut rng)?;
    let mitigated = fermion::assemble(p.n, &data, p.flags, opts.mcweeny_max_iter, opts.mcweeny_tol)?;
    // same counts, with post-selection and purification switched off
    let raw_flags = MitigationFlags { post_select: false, mcweeny: false, recompile: p.flags.recompile };
    let raw = fermion::assemble(p.n, &data, raw_flags, opts.mcweeny_max_iter, opts.mcweeny_tol)?;
    Ok(TrainingPoint {
        x: spec.x,
        mitigated: upper_triangle(&mitigated.c),
        raw: upper_triangle(&raw.c),
        exact: upper_triangle(&exact),
        retention: mitigated.retention.iter().copied().fold(1.0, f64::min),
    })
}

fn columns(prefix: &str, k: usize) -> Vec<String> {
    (0..k).map(|i| format!("{prefix}{i}")).collect()
}

fn acquire_stage(p: &GroundStateParams, ctx: &StageContext) -> HarnessResult<Vec<PathBuf>> {
    let m = p.n_pairs();
    let points = (0..p.n_data)
        .into_par_iter()
        .map(|i| simulate_point(p, ctx.seed, i))
        .collect::<Result<Vec<_>, _>>()
        .at(ctx)?;
    let mut header = vec!["point".to_string()];
    header.extend(columns("x", p.n - 1));
    header.extend(columns("mit", m));
    header.extend(columns("raw", m));
    header.extend(columns("exact", m));
    header.push("min_retention".into());
    let mut train = Table::new(&header);
    for (i, pt) in points.iter().enumerate() {
        let mut row = vec![i.to_string()];
        for v in pt.x.iter().chain(&pt.mitigated).chain(&pt.raw).chain(&pt.exact) {
            row.push(num(*v));
        }
        row.push(num(pt.retention));
        train.push(row);
    }

    let tests = (0..p.n_test)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(ctx.seed, "test", i as u64);
            let spec = HoppingSpec::uniform(p.n, &mut rng, None)?;
            let c = ground_correlation(&build_hopping(&spec)?, p.n / 2)?.c;
            Ok((spec.x, upper_triangle(&c)))
        })
        .collect::<fermion::FermionResult<Vec<_>>>()
        .at(ctx)?;
    let mut header = vec!["point".to_string()];
    header.extend(columns("x", p.n - 1));
    header.extend(columns("exact", m));
    let mut test = Table::new(&header);
    for (i, (x, c)) in tests.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(x.iter().chain(c).map(|v| num(*v)));
        test.push(row);
    }
    Ok(vec![
        train.write(&ctx.path("train.csv"), ctx.master_seed, &ctx.config_hash)?,
        test.write(&ctx.path("test.csv"), ctx.master_seed, &ctx.config_hash)?,
    ])
}

/// Numeric block of columns `{prefix}0..{prefix}{k-1}`, one `Vec` per row.
fn block(headers: &[String], rows: &[Vec<String>], prefix: &str, k: usize) -> HarnessResult<Vec<Vec<f64>>> {
    let idx = (0..k)
        .map(|i| {
            let name = format!("{prefix}{i}");
            headers.iter().position(|h| *h == name).ok_or_else(|| HarnessError::stage(TRAIN, format!("missing column {name}")))
        })
        .collect::<HarnessResult<Vec<usize>>>()?;
    rows.iter().map(|r| idx.iter().map(|&j| parse_f64(&r[j])).collect()).collect()
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), m, |i, j| rows[i][j])
}

fn resolve_kernel(spec: &KernelSpec, xs: &[Vec<f64>]) -> HarnessResult<KernelSpec> {
    if spec.name == "gaussian" && spec.param("alpha").is_none() {
        let alpha = gaussian_alpha(xs).map_err(|e| HarnessError::stage(TRAIN, e))?;
        return Ok(spec.clone().with_param("alpha", alpha));
    }
    Ok(spec.clone())
}

/// Chooses λ on a held-out tail of `xs`, then refits on all of it.
fn fit_with_holdout(
    reg: &KernelRegistry,
    spec: &KernelSpec,
    xs: &[Vec<f64>],
    y: &DMatrix<f64>,
    holdout: f64,
    grid: &[f64],
) -> shadowlab::ml::MlResult<KrrModel> {
    let n = xs.len();
    let n_val = ((holdout * n as f64).round() as usize).clamp(1, n - 1);
    let n_fit = n - n_val;
    let y_fit = y.rows(0, n_fit).into_owned();
    let y_val = y.rows(n_fit, n_val).into_owned();
    let (lambda, _) = select_lambda(reg, spec, (&xs[..n_fit], &y_fit), (&xs[n_fit..], &y_val), grid)?;
    krr_fit(reg, spec, xs, y, lambda)
}

fn edge(n: usize, v: &[f64]) -> f64 {
    from_upper_triangle(n, v)[(0, n - 1)]
}

fn train_stage(p: &GroundStateParams, ctx: &StageContext) -> HarnessResult<Vec<PathBuf>> {
    let m = p.n_pairs();
    let (h, rows) = read_table(&ctx.path("train.csv"))?;
    let x = block(&h, &rows, "x", p.n - 1)?;
    let y_mit = to_matrix(&block(&h, &rows, "mit", m)?);
    let y_raw = to_matrix(&block(&h, &rows, "raw", m)?);
    let y_exact = to_matrix(&block(&h, &rows, "exact", m)?);
    let (h, rows) = read_table(&ctx.path("test.csv"))?;
    let x_test = block(&h, &rows, "x", p.n - 1)?;
    let y_test = to_matrix(&block(&h, &rows, "exact", m)?);

    let reg = KernelRegistry::default();
    let mut artifacts = Vec::new();
    let mut metrics = Table::new(&["run_id", "N_data", "kernel", "lambda", "rmse_train", "rmse_test"]);
    let run_id = &ctx.config_hash[..12.min(ctx.config_hash.len())];
    let mut kernels = Vec::new();
    let mut ssh = Vec::new();
    let ssh_specs = p
        .ssh_w
        .iter()
        .map(|&w| HoppingSpec::ssh(p.ssh_v, w, p.n))
        .collect::<Result<Vec<_>, _>>()
        .at(ctx)?;
    let ssh_x: Vec<Vec<f64>> = ssh_specs.iter().map(|s| s.x.clone()).collect();
    let ssh_exact = ssh_specs
        .iter()
        .map(|s| Ok(ground_correlation(&build_hopping(s)?, p.n / 2)?.c[(0, p.n - 1)]))
        .collect::<fermion::FermionResult<Vec<f64>>>()
        .at(ctx)?;

    for base in &p.kernels {
        let mut sweep = Vec::new();
        let mut last = None;
        for &k in &p.n_sweep {
            let xs = &x[..k];
            let spec = resolve_kernel(base, xs)?;
            let y = y_mit.rows(0, k).into_owned();
            let model = fit_with_holdout(&reg, &spec, xs, &y, p.holdout, &p.lambda_grid).at(ctx)?;
            let rmse_train = rmse(&model.predict(&reg, xs).at(ctx)?, &y_exact.rows(0, k).into_owned()).at(ctx)?;
            let rmse_test = rmse(&model.predict(&reg, &x_test).at(ctx)?, &y_test).at(ctx)?;
            metrics.push(vec![
                run_id.to_string(),
                k.to_string(),
                base.name.clone(),
                num(model.lambda),
                num(rmse_train),
                num(rmse_test),
            ]);
            sweep.push(SweepRow { n_data: k, lambda: model.lambda, rmse_train, rmse_test });
            last = Some(model);
        }
        let model = last.expect("n_sweep is non-empty");
        let path = ctx.path(&format!("models/{}.json", base.name));
        write_atomic(&path, model.to_json().at(ctx)?.as_bytes())?;
        artifacts.push(path);

        let pred = model.predict(&reg, &ssh_x).at(ctx)?;
        for (i, &w) in p.ssh_w.iter().enumerate() {
            let row: Vec<f64> = pred.row(i).iter().copied().collect();
            ssh.push(SshRow { kernel: base.name.clone(), w, edge_exact: ssh_exact[i], edge_predicted: edge(p.n, &row) });
        }
        let log_n: Vec<f64> = sweep.iter().map(|r| (r.n_data as f64).ln()).collect();
        let inv: Vec<f64> = sweep.iter().map(|r| 1.0 / r.rmse_test).collect();
        kernels.push(KernelResult {
            kernel: model.kernel.clone(),
            test_rmse: sweep.last().map_or(f64::NAN, |r| r.rmse_test),
            inv_rmse_slope: if sweep.len() > 1 { fit_slope(&log_n, &inv) } else { f64::NAN },
            sweep,
        });
    }

    let mut ssh_table = Table::new(&["kernel", "w", "edge_exact", "edge_predicted"]);
    for r in &ssh {
        ssh_table.push(vec![r.kernel.clone(), num(r.w), num(r.edge_exact), num(r.edge_predicted)]);
    }
    let first: Vec<&SshRow> = ssh.iter().filter(|r| r.kernel == p.kernels[0].name).collect();
    let at = |w: f64, f: fn(&SshRow) -> f64| first.iter().find(|r| (r.w - w).abs() < 1e-9).map(|r| f(r));
    let step = |f: fn(&SshRow) -> f64| Some(at(1.5, f)? - at(0.5, f)?);
    let report = PredictReport {
        n: p.n,
        n_data: p.n_data,
        n_test: p.n_test,
        train_rmse_raw: rmse(&y_raw, &y_exact).at(ctx)?,
        train_rmse_mitigated: rmse(&y_mit, &y_exact).at(ctx)?,
        kernels,
        ssh_max_error: first.iter().map(|r| (r.edge_predicted - r.edge_exact).abs()).fold(0.0, f64::max),
        ssh_step_predicted: step(|r| r.edge_predicted),
        ssh_step_exact: step(|r| r.edge_exact),
        ssh,
    };
    artifacts.push(metrics.write(&ctx.path("rmse.csv"), ctx.master_seed, &ctx.config_hash)?);
    artifacts.push(ssh_table.write(&ctx.path("ssh.csv"), ctx.master_seed, &ctx.config_hash)?);
    let path = ctx.path("report.json");
    write_json(&path, &report)?;
    artifacts.push(path);
    Ok(artifacts)
}
