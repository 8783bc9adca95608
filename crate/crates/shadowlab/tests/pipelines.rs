//! Cross-module paths: files on disk, exact free-fermion data and the learners fed by them.

use nalgebra::DMatrix;
use shadowlab::fermion::{
    build_hopping, estimate_correlation_matrix, ground_correlation, upper_triangle, EstimateOptions, HoppingSpec,
    MitigationFlags,
};
use shadowlab::ml::{kernel_pca, krr_fit, rmse, KernelRegistry, KernelSpec};
use shadowlab::phases::{build_spt_dataset, load_manifest, save_dataset, SptConfig, SymmetryClass};
use shadowlab::rng::stream;
use shadowlab::shadows::{self, normalized_gram, KernelVariant, LocalObservable, PreparedShadows};
use shadowlab::sim::{NoiseModel, PauliString};

#[test]
fn saved_shadows_reload_to_the_same_estimates_and_kernel() {
    let ds = build_spt_dataset(&SptConfig { t: 40, per_class: 2, ..SptConfig::new(6, SymmetryClass::Z2xZ2, 1) }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&ds, dir.path()).unwrap();
    let back = load_manifest(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(back, ds);

    let path = dir.path().join("one.jsonl");
    shadows::save(&ds.entries[0].shadows, &path).unwrap();
    let set = shadows::load(&path).unwrap();
    let obs = LocalObservable::Pauli(PauliString::parse("ZXZIII", 1.0).unwrap());
    assert_eq!(shadows::estimate(&set, &obs).unwrap(), shadows::estimate(&ds.entries[0].shadows, &obs).unwrap());
    let (a, b) = (PreparedShadows::new(&set), PreparedShadows::new(&ds.entries[1].shadows));
    let orig = PreparedShadows::new(&ds.entries[0].shadows);
    assert_eq!(
        shadows::log_shadow_kernel(&a, &b, 1.0, 1.0, KernelVariant::Full).unwrap(),
        shadows::log_shadow_kernel(&orig, &b, 1.0, 1.0, KernelVariant::Full).unwrap()
    );
}

#[test]
fn normalized_gram_feeds_kernel_pca() {
    let ds = build_spt_dataset(&SptConfig { t: 60, per_class: 4, ..SptConfig::new(6, SymmetryClass::Z2xZ2, 2) }).unwrap();
    let sets: Vec<_> = ds.entries.iter().map(|e| e.shadows.clone()).collect();
    let k = normalized_gram(&sets, 1.0, 1.0, KernelVariant::OffDiagonal).unwrap();
    for i in 0..k.nrows() {
        assert!((k[(i, i)] - 1.0).abs() < 1e-12);
        for j in 0..i {
            assert_eq!(k[(i, j)], k[(j, i)]);
        }
    }
    let pca = kernel_pca(&k, 2, true).unwrap();
    assert_eq!(pca.embedding.len(), sets.len());
    assert!(pca.embedding.iter().flatten().all(|v| v.is_finite()));
}

#[test]
fn exact_measurement_reproduces_the_ground_correlation() {
    let mut rng = stream(3, "spec", 0);
    let spec = HoppingSpec::uniform(6, &mut rng, None).unwrap();
    let exact = ground_correlation(&build_hopping(&spec).unwrap(), 3).unwrap().c;
    for flags in [MitigationFlags::none(), MitigationFlags::all()] {
        let opts = EstimateOptions { exact: true, flags, ..EstimateOptions::default() };
        let est = estimate_correlation_matrix(&spec, &opts, &NoiseModel::noiseless(), &mut rng).unwrap();
        assert!((&est.c - &exact).amax() < 1e-9, "{flags:?}");
    }
}

#[test]
fn kernel_ridge_learns_correlations_from_hoppings() {
    let n = 6;
    let mut rng = stream(5, "krr", 0);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for _ in 0..120 {
        let spec = HoppingSpec::uniform(n, &mut rng, None).unwrap();
        let c = ground_correlation(&build_hopping(&spec).unwrap(), n / 2).unwrap().c;
        xs.push(spec.x.clone());
        ys.push(upper_triangle(&c));
    }
    let y = DMatrix::from_fn(ys.len(), ys[0].len(), |i, j| ys[i][j]);
    let (train, test) = (100, 20);
    let reg = KernelRegistry::default();
    let model = krr_fit(&reg, &KernelSpec::gaussian(0.5), &xs[..train], &y.rows(0, train).into_owned(), 1e-3).unwrap();
    let pred = model.predict(&reg, &xs[train..]).unwrap();
    let truth = y.rows(train, test).into_owned();
    let mean = DMatrix::from_fn(test, y.ncols(), |_, j| y.rows(0, train).column(j).mean());
    let (learned, baseline) = (rmse(&pred, &truth).unwrap(), rmse(&mean, &truth).unwrap());
    assert!(learned < 0.5 * baseline, "learned {learned} vs mean predictor {baseline}");
}
