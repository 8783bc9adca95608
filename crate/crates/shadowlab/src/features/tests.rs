use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::sim::{haar_single_qubit, Pauli};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_state(n: usize, r: &mut ChaCha8Rng) -> StateVector {
    use rand_distr::{Distribution, StandardNormal};
    let amps = (0..1usize << n).map(|_| C64::new(StandardNormal.sample(r), StandardNormal.sample(r))).collect();
    StateVector::from_unnormalized(n, amps).unwrap()
}

fn random_mixed(k: usize, rank: usize, r: &mut ChaCha8Rng) -> DensityMatrix {
    let dim = 1 << k;
    let mut rho = DMatrix::zeros(dim, dim);
    for _ in 0..rank {
        let psi = random_state(k, r);
        let v = DMatrix::from_column_slice(dim, 1, psi.amplitudes());
        rho += &v * v.adjoint() * C64::new(r.gen::<f64>(), 0.0);
    }
    let tr = rho.trace();
    rho / tr
}

fn ghz(n: usize) -> StateVector {
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    amps[0] = C64::new(1.0, 0.0);
    amps[(1 << n) - 1] = C64::new(1.0, 0.0);
    StateVector::from_unnormalized(n, amps).unwrap()
}

fn frob(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn noiseless_response_is_identity() {
    let r = calibrate_response(4, &NoiseModel::noiseless(), 100, &mut rng(0)).unwrap();
    assert_eq!(r, ResponseMatrix::identity(4));
    assert!(matches!(calibrate_response(2, &NoiseModel::noiseless(), 0, &mut rng(0)), Err(FeatureError::ZeroShots)));
}

#[test]
fn calibrated_response_matches_product_channel() {
    let noise = NoiseModel::new(0.0, 0.0, 0.05).unwrap();
    let shots = 20_000;
    let r = calibrate_response(3, &noise, shots, &mut rng(1)).unwrap();
    let exact = ResponseMatrix::exact(3, &noise);
    assert!(r.column_sum_error() < 1e-12);
    for (a, e) in r.r.iter().zip(exact.r.iter()) {
        let sigma = (e * (1.0 - e) / shots as f64).sqrt();
        assert!((a - e).abs() <= 3.0 * sigma + 1e-12, "{a} vs {e}");
    }
    // entry for one flip out of three
    assert!((exact.r[(1, 0)] - 0.05 * 0.95 * 0.95).abs() < 1e-15);
}

#[test]
fn mitigation_inverts_forward_model() {
    let noise = NoiseModel { p_m01: Some(0.03), p_m10: Some(0.08), ..NoiseModel::new(0.0, 0.0, 0.0).unwrap() };
    let resp = ResponseMatrix::exact(4, &noise);
    let mut r = rng(2);
    let raw: Vec<f64> = (0..16).map(|_| r.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let p_true: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let p_exp: Vec<f64> = (0..16).map(|o| (0..16).map(|j| resp.r[(o, j)] * p_true[j]).sum()).collect();
    let back = mitigate(&resp, &p_exp).unwrap();
    for (a, b) in back.iter().zip(&p_true) {
        assert!((a - b).abs() < 1e-8);
    }
    assert!((back.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    assert_eq!(mitigate(&ResponseMatrix::identity(4), &p_exp).unwrap(), p_exp);
    let singular = ResponseMatrix { k: 1, r: DMatrix::from_element(2, 2, 0.5) };
    assert!(matches!(mitigate(&singular, &[0.5, 0.5]), Err(FeatureError::Singular)));
}

#[test]
fn simplex_projection_basics() {
    assert_eq!(project_to_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
    let p = project_to_simplex(&[1.2, -0.1, 0.1]);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12 && p.iter().all(|&x| x >= 0.0));
    assert!((p[0] - 1.0).abs() < 1e-12);
}

#[test]
fn tomography_recovers_pure_and_mixed_states() {
    let zero = reduced_density_matrix(&StateVector::zero(4).unwrap(), &[0, 1, 2, 3]).unwrap();
    let data = measure_tomography(&zero, 0, &NoiseModel::noiseless(), &mut rng(0)).unwrap();
    assert_eq!(data.settings.len(), 81);
    assert!(frob(&mle_qst(&data).unwrap(), &zero) < 1e-8);
    let mixed = DMatrix::identity(16, 16) * C64::new(1.0 / 16.0, 0.0);
    let data = measure_tomography(&mixed, 0, &NoiseModel::noiseless(), &mut rng(0)).unwrap();
    assert!(frob(&mle_qst(&data).unwrap(), &mixed) < 1e-8);
    let mut r = rng(3);
    let rho = random_mixed(4, 3, &mut r);
    let data = measure_tomography(&rho, 0, &NoiseModel::noiseless(), &mut r).unwrap();
    assert!(frob(&mle_qst(&data).unwrap(), &rho) < 1e-8);
}

#[test]
fn incomplete_settings_are_rejected() {
    let rho = DMatrix::identity(4, 4) * C64::new(0.25, 0.0);
    let mut data = measure_tomography(&rho, 0, &NoiseModel::noiseless(), &mut rng(0)).unwrap();
    data.settings.retain(|s| s.bases[0] != Pauli::Y);
    assert!(matches!(mle_qst(&data), Err(FeatureError::Incomplete(_))));
}

#[test]
fn projection_is_the_closest_physical_state() {
    let mut r = rng(4);
    for _ in 0..10 {
        let rho = random_mixed(2, 2, &mut r);
        // push one eigenvalue negative with a traceless Hermitian kick
        let h = random_mixed(2, 4, &mut r) - DMatrix::identity(4, 4) * C64::new(0.25, 0.0);
        let bad = &rho + &h * C64::new(0.8, 0.0);
        let proj = project_physical(&bad);
        let eig = nalgebra::SymmetricEigen::new(proj.clone());
        assert!(eig.eigenvalues.min() > -1e-12);
        assert!((proj.trace().re - 1.0).abs() < 1e-12);
        // variational inequality of a convex projection: Re tr[(A − P)(σ − P)] ≤ 0
        for _ in 0..200 {
            let sigma = random_mixed(2, 1 + r.gen_range(0..4), &mut r);
            let ip = ((&bad - &proj) * (&sigma - &proj)).trace().re;
            assert!(ip <= 1e-10, "{ip}");
            assert!(frob(&bad, &proj) <= frob(&bad, &sigma) + 1e-12);
        }
        assert!(frob(&project_physical(&proj), &proj) < 1e-10);
    }
}

#[test]
fn renyi2_reference_values() {
    let pure = reduced_density_matrix(&StateVector::zero(2).unwrap(), &[0, 1]).unwrap();
    assert!(renyi2(&pure).unwrap().abs() < 1e-12);
    let one = DMatrix::identity(2, 2) * C64::new(0.5, 0.0);
    assert!((renyi2(&one).unwrap() - 1.0).abs() < 1e-12);
    let two = DMatrix::identity(4, 4) * C64::new(0.25, 0.0);
    assert!((renyi2(&two).unwrap() - 2.0).abs() < 1e-12);
    let over = DMatrix::identity(2, 2) * C64::new(1.0, 0.0);
    assert!(matches!(renyi2(&over), Err(FeatureError::Unphysical(_))));
}

#[test]
fn renyi2_is_additive_on_products() {
    let mut r = rng(5);
    let a = random_mixed(1, 2, &mut r);
    let b = random_mixed(2, 2, &mut r);
    // local bit 0 is the low factor
    let ab = b.kronecker(&a);
    let s = renyi2(&ab).unwrap();
    assert!((s - renyi2(&a).unwrap() - renyi2(&b).unwrap()).abs() < 1e-9);
    assert!(frob(&partial_trace(&ab, &[0]), &a) < 1e-12);
    assert!(frob(&partial_trace(&ab, &[1, 2]), &b) < 1e-12);
}

#[test]
fn product_and_ghz_features() {
    let mut r = rng(6);
    let mut prod = StateVector::zero(9).unwrap();
    for q in 0..9 {
        prod.apply_single(q, &haar_single_qubit(&mut r)).unwrap();
    }
    assert!(feature_map_exact(&prod, &DEFAULT_WINDOW).unwrap().iter().all(|s| s.abs() < 1e-10));
    let g = ghz(4);
    let phi = feature_map_exact(&g, &[0, 1, 2, 3]).unwrap();
    assert!((phi[0] - 1.0).abs() < 1e-12);
    assert!(phi[14].abs() < 1e-12);
    assert!(phi[4..14].iter().all(|s| (s - 1.0).abs() < 1e-12));
    assert!(feature_map_exact(&g, &[0, 1, 2, 2]).is_err());
}

#[test]
fn relabelling_the_window_permutes_features() {
    let s = random_state(6, &mut rng(7));
    let w = [0, 2, 3, 5];
    let perm = [2, 0, 3, 1];
    let swapped = [w[perm[0]], w[perm[1]], w[perm[2]], w[perm[3]]];
    let a = feature_map_exact(&s, &w).unwrap();
    let b = feature_map_exact(&s, &swapped).unwrap();
    for (i, subset) in SUBSETS.iter().enumerate() {
        let mut image: Vec<usize> = subset.iter().map(|&j| perm[j]).collect();
        image.sort();
        let k = SUBSETS.iter().position(|t| *t == image.as_slice()).unwrap();
        assert!((b[i] - a[k]).abs() < 1e-10);
    }
}

#[test]
fn complement_entropy_of_pure_state() {
    let s = random_state(9, &mut rng(8));
    let window = [0, 1, 4, 5];
    let rest: Vec<usize> = (0..9).filter(|q| !window.contains(q)).collect();
    let a = renyi2(&reduced_density_matrix(&s, &window).unwrap()).unwrap();
    let b = renyi2(&reduced_density_matrix(&s, &rest).unwrap()).unwrap();
    assert!((a - b).abs() < 1e-9);
}

#[test]
fn measured_features_track_exact() {
    let l0 = logical_zero_d3().unwrap();
    let mut r = rng(9);
    let s = extraction_state(true, &l0, 1, &mut r).unwrap();
    let exact = feature_map_exact(&s, &DEFAULT_WINDOW).unwrap();
    let measured = feature_map_measured(&s, &DEFAULT_WINDOW, 50_000, &NoiseModel::noiseless(), None, &mut r).unwrap();
    for (a, b) in exact.iter().zip(&measured) {
        assert!((a - b).abs() < 0.02, "{a} vs {b}");
    }
}

#[test]
fn mitigated_features_beat_raw_under_readout_noise() {
    let noise = NoiseModel::new(0.0, 0.0, 0.04).unwrap();
    let resp = ResponseMatrix::exact(4, &noise);
    let l0 = logical_zero_d3().unwrap();
    let mut r = rng(10);
    let s = extraction_state(false, &l0, 1, &mut r).unwrap();
    let exact = feature_map_exact(&s, &DEFAULT_WINDOW).unwrap();
    let raw = feature_map_measured(&s, &DEFAULT_WINDOW, 20_000, &noise, None, &mut r).unwrap();
    let mem = feature_map_measured(&s, &DEFAULT_WINDOW, 20_000, &noise, Some(&resp), &mut r).unwrap();
    let err = |v: &FeatureVector| v.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum::<f64>();
    assert!(err(&mem) < err(&raw), "{} vs {}", err(&mem), err(&raw));
}

#[test]
fn logical_zero_window_entropies() {
    // the only stabilizer inside the window is Z̄·Z₁Z₂Z₄Z₅ = Z₀Z₄Z₅, at window positions {0, 2, 3}
    let phi = feature_map_exact(&logical_zero_d3().unwrap(), &DEFAULT_WINDOW).unwrap();
    for (s, subset) in phi.iter().zip(SUBSETS) {
        let holds = [0, 2, 3].iter().all(|j| subset.contains(j));
        let want = subset.len() as f64 - if holds { 1.0 } else { 0.0 };
        assert!((s - want).abs() < 1e-10, "{subset:?}: {s}");
    }
    // Kitaev-Preskill sum is −1, so the oriented TEE classifier reads +0.9
    assert!((LinearClassifier::tee().decision(&phi) - 0.9).abs() < 1e-10);
    assert!((LinearClassifier::tee().decision(&[0.0; N_FEATURES]) + 0.1).abs() < 1e-12);
}

#[test]
fn separable_toy_features_train_perfectly() {
    let mut r = rng(11);
    let mut feats = Vec::new();
    let mut labels = Vec::new();
    for i in 0..30 {
        let y = if i % 2 == 0 { 1.0 } else { -1.0 };
        let mut x = [0.0; N_FEATURES];
        x.iter_mut().for_each(|v| *v = r.gen_range(0.0..1.0));
        x[4] = if y > 0.0 { 1.5 + r.gen::<f64>() } else { r.gen::<f64>() * 0.5 };
        feats.push(x);
        labels.push(y);
    }
    let (clf, acc) = fit_linear_classifier(&feats, &labels, 10.0).unwrap();
    assert_eq!(acc, 1.0);
    assert_eq!(clf.error_rate(&feats, &labels), 0.0);
    let flipped: Vec<f64> = labels.iter().map(|y| -y).collect();
    let (neg, _) = fit_linear_classifier(&feats, &flipped, 10.0).unwrap();
    for (a, b) in clf.w.iter().zip(&neg.w) {
        assert!((a + b).abs() < 1e-4 * (1.0 + a.abs()));
    }
    assert!((clf.w0 + neg.w0).abs() < 1e-4 * (1.0 + clf.w0.abs()));
    assert!(matches!(fit_linear_classifier(&feats, &vec![1.0; 30], 1.0), Err(FeatureError::SingleClass)));
}

#[test]
fn evaluation_is_reproducible_and_shaped() {
    let clfs = [LinearClassifier::tee(), LinearClassifier { w: REFERENCE_ML_WEIGHTS.to_vec(), w0: REFERENCE_ML_OFFSET }];
    let a = evaluate_classifiers(&clfs, 3, 20, 2, 0.1, &DEFAULT_WINDOW, 1).unwrap();
    let b = evaluate_classifiers(&clfs, 3, 20, 2, 0.1, &DEFAULT_WINDOW, 1).unwrap();
    assert_eq!(a, b);
    assert_eq!((a.len(), a[0].len()), (2, 3));
    assert!(a.iter().flatten().all(|e| (0.0..=1.0).contains(e)));
}

#[test]
fn zero_noise_separable_features_have_zero_error() {
    let clf = LinearClassifier { w: vec![1.0; N_FEATURES], w0: -5.0 };
    let feats = vec![[1.0; N_FEATURES], [0.0; N_FEATURES]];
    assert_eq!(clf.error_rate(&feats, &[1.0, -1.0]), 0.0);
    let mut r = rng(12);
    let p = perturb(&feats[0], 0.1, &mut r);
    assert!(p.iter().all(|x| (x - 1.0).abs() <= 0.1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mle_output_is_always_physical(seed in any::<u64>(), shots in 50u64..400) {
        let mut r = rng(seed);
        let rho = random_mixed(2, 2, &mut r);
        let data = measure_tomography(&rho, shots, &NoiseModel::new(0.0, 0.0, 0.05).unwrap(), &mut r).unwrap();
        let est = mle_qst(&data).unwrap();
        let eig = nalgebra::SymmetricEigen::new(est.clone());
        prop_assert!(eig.eigenvalues.min() > -1e-10);
        prop_assert!((est.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(frob(&est, &est.adjoint()) < 1e-10);
    }

    #[test]
    fn features_lie_in_range(seed in any::<u64>()) {
        let s = random_state(6, &mut rng(seed));
        let phi = feature_map_exact(&s, &[5, 0, 3, 1]).unwrap();
        for (v, subset) in phi.iter().zip(SUBSETS) {
            prop_assert!(*v >= -1e-12 && *v <= subset.len() as f64 + 1e-9);
        }
    }
}
