use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::sim::{haar_single_qubit, mat, Pauli, PauliString, StateVector};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn identity_record(n: usize, bits: u64) -> ShadowRecord {
    ShadowRecord::from_unitaries(bits, &vec![mat::identity2(); n])
}

fn single(records: Vec<ShadowRecord>) -> ShadowSet {
    let n = records[0].n_qubits();
    ShadowSet::new(n, records, ShadowMeta::default()).unwrap()
}

fn z_obs(n: usize, q: usize) -> LocalObservable {
    LocalObservable::Pauli(PauliString::from_sparse(n, &[(q, Pauli::Z)], 1.0).unwrap())
}

fn random_state(n: usize, r: &mut ChaCha8Rng) -> StateVector {
    use rand_distr::{Distribution, StandardNormal};
    let amps = (0..1 << n)
        .map(|_| C64::new(StandardNormal.sample(r), StandardNormal.sample(r)))
        .collect();
    StateVector::from_unnormalized(n, amps).unwrap()
}

#[test]
fn identity_snapshot_gives_three_for_z() {
    let set = single(vec![identity_record(1, 0)]);
    assert!((estimate(&set, &z_obs(1, 0)).unwrap().mean - 3.0).abs() < 1e-12);
    let s = set.records[0].snapshot(0);
    assert!((s[0][0].re - 2.0).abs() < 1e-12 && (s[1][1].re + 1.0).abs() < 1e-12);
}

#[test]
fn zero_state_z_is_unbiased() {
    let s = StateVector::zero(1).unwrap();
    let set = acquire(&s, 50_000, &NoiseModel::noiseless(), &mut rng(1)).unwrap();
    let e = estimate(&set, &z_obs(1, 0)).unwrap();
    assert!((e.mean - 1.0).abs() < 3.0 * e.stderr, "{e:?}");
}

#[test]
fn acquisition_replays_under_fixed_seed() {
    let s = StateVector::zero(1).unwrap();
    let a = acquire(&s, 3, &NoiseModel::noiseless(), &mut rng(9)).unwrap();
    let b = acquire(&s, 3, &NoiseModel::noiseless(), &mut rng(9)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn global_depolarising_gives_uniform_outcomes() {
    let s = StateVector::zero(2).unwrap();
    let noise = NoiseModel { p_global: 1.0, ..NoiseModel::noiseless() };
    let set = acquire(&s, 10_000, &noise, &mut rng(2)).unwrap();
    let mut counts = [0f64; 4];
    for r in &set.records {
        counts[r.bits as usize] += 1.0;
    }
    let chi2: f64 = counts.iter().map(|c| (c - 2500.0).powi(2) / 2500.0).sum();
    // 3 degrees of freedom, 0.999 quantile 16.27
    assert!(chi2 < 16.27, "chi2 {chi2}");
}

#[test]
fn virtual_identity_keeps_estimates() {
    let s = random_state(2, &mut rng(3));
    let set = acquire(&s, 200, &NoiseModel::noiseless(), &mut rng(4)).unwrap();
    let v = virtual_unitary(&set, &[mat::identity2(), mat::identity2()]).unwrap();
    let obs = LocalObservable::Pauli(PauliString::parse("XY", 1.0).unwrap());
    for (a, b) in set.records.iter().zip(&v.records) {
        assert_eq!(a.bits, b.bits);
        assert!((obs.single_shot(a) - obs.single_shot(b)).abs() < 1e-12);
    }
}

#[test]
fn virtual_x_flips_z() {
    let s = StateVector::zero(1).unwrap();
    let set = acquire(&s, 20_000, &NoiseModel::noiseless(), &mut rng(5)).unwrap();
    let v = virtual_unitary(&set, &[Pauli::X.matrix()]).unwrap();
    let e = estimate(&v, &z_obs(1, 0)).unwrap();
    assert!((e.mean + 1.0).abs() < 3.0 * e.stderr, "{e:?}");
    assert!(matches!(virtual_unitary(&set, &[]), Err(ShadowError::NotFactorized)));
}

#[test]
fn virtual_gate_matches_physical_gate() {
    let mut r = rng(6);
    for _ in 0..5 {
        let s = random_state(2, &mut r);
        let v = [haar_single_qubit(&mut r), haar_single_qubit(&mut r)];
        let mut phys = s.clone();
        phys.apply_single(0, &v[0]).unwrap();
        phys.apply_single(1, &v[1]).unwrap();
        let obs = LocalObservable::Pauli(PauliString::parse("ZX", 1.0).unwrap());
        let a = estimate(&acquire(&phys, 20_000, &NoiseModel::noiseless(), &mut r).unwrap(), &obs).unwrap();
        let b = estimate(&virtual_unitary(&acquire(&s, 20_000, &NoiseModel::noiseless(), &mut r).unwrap(), &v).unwrap(), &obs).unwrap();
        let comb = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        assert!((a.mean - b.mean).abs() < 4.0 * comb, "{a:?} {b:?}");
    }
}

#[test]
fn overlap_extremes() {
    let a = identity_record(1, 0);
    let b = identity_record(1, 1);
    assert!((snapshot_overlap(&a, &a, 0) - 5.0).abs() < 1e-12);
    assert!((snapshot_overlap(&a, &b, 0) + 4.0).abs() < 1e-12);
}

#[test]
fn overlap_closed_form_matches_matrix_trace() {
    let mut r = rng(7);
    for _ in 0..1000 {
        let a = ShadowRecord::from_unitaries(rand::Rng::gen_range(&mut r, 0..2), &[haar_single_qubit(&mut r)]);
        let b = ShadowRecord::from_unitaries(rand::Rng::gen_range(&mut r, 0..2), &[haar_single_qubit(&mut r)]);
        let prod = mat::matmul2(&a.snapshot(0), &b.snapshot(0));
        let tr = (prod[0][0] + prod[1][1]).re;
        let v = snapshot_overlap(&a, &b, 0);
        assert!((v - tr).abs() < 1e-12);
        assert!((-4.0 - 1e-12..=5.0 + 1e-12).contains(&v));
    }
}

#[test]
fn singleton_full_kernel_is_double_exponential() {
    let set = single(vec![identity_record(1, 0)]);
    let k = shadow_kernel(&set, &set, 1.0, 1.0, KernelVariant::Full).unwrap();
    assert!((k.log - 5f64.exp()).abs() < 1e-10);
    assert!((k.value / 5f64.exp().exp() - 1.0).abs() < 1e-12);
    assert!((k.value - 2.85e64).abs() / 2.85e64 < 0.01);
    assert!(!k.clamped);
}

#[test]
fn kernel_symmetry_and_degenerate_gamma() {
    let mut r = rng(8);
    let a = acquire(&random_state(3, &mut r), 20, &NoiseModel::noiseless(), &mut r).unwrap();
    let b = acquire(&random_state(3, &mut r), 20, &NoiseModel::noiseless(), &mut r).unwrap();
    for variant in [KernelVariant::Full, KernelVariant::OffDiagonal] {
        let ab = shadow_kernel(&a, &b, 1.0, 1.0, variant).unwrap();
        let ba = shadow_kernel(&b, &a, 1.0, 1.0, variant).unwrap();
        assert_eq!(ab.log, ba.log);
        let g0 = shadow_kernel(&a, &b, 0.7, 0.0, variant).unwrap();
        assert!((g0.value - 0.7f64.exp()).abs() < 1e-12);
    }
    let one = single(vec![identity_record(1, 0)]);
    assert!(matches!(shadow_kernel(&one, &one, 1.0, 1.0, KernelVariant::OffDiagonal), Err(ShadowError::TooFewRecords)));
}

#[test]
fn huge_kernel_values_are_clamped() {
    let set = single(vec![identity_record(1, 0)]);
    let k = shadow_kernel(&set, &set, 10.0, 1.0, KernelVariant::Full).unwrap();
    assert!(k.clamped && k.value.is_finite());
}

#[test]
fn gram_is_symmetric_permutation_equivariant_and_psd() {
    let mut r = rng(10);
    let sets: Vec<ShadowSet> =
        (0..6).map(|_| acquire(&random_state(3, &mut r), 30, &NoiseModel::noiseless(), &mut r).unwrap()).collect();
    let g = gram(&sets, 1.0, 1.0, KernelVariant::Full).unwrap();
    let single_entry = gram(&sets[..1], 1.0, 1.0, KernelVariant::Full).unwrap();
    assert_eq!(single_entry.log[(0, 0)], g.log[(0, 0)]);
    let perm = [3, 0, 5, 1, 4, 2];
    let permuted: Vec<ShadowSet> = perm.iter().map(|&i| sets[i].clone()).collect();
    let gp = gram(&permuted, 1.0, 1.0, KernelVariant::Full).unwrap();
    for i in 0..6 {
        for j in 0..6 {
            assert_eq!(gp.log[(i, j)], g.log[(perm[i], perm[j])]);
            assert_eq!(g.log[(i, j)], g.log[(j, i)]);
        }
    }
    let k = g.normalized();
    let min = nalgebra::SymmetricEigen::new(k.clone()).eigenvalues.min();
    assert!(min >= -1e-8 * k.norm(), "{min}");
}

#[test]
fn mixed_qubit_counts_are_rejected() {
    let a = single(vec![identity_record(1, 0)]);
    let b = single(vec![identity_record(2, 0)]);
    assert!(matches!(gram(&[a, b], 1.0, 1.0, KernelVariant::Full), Err(ShadowError::MixedQubitCounts)));
}

#[test]
fn dense_and_pauli_observables_agree_per_record() {
    let mut r = rng(11);
    let set = acquire(&random_state(3, &mut r), 50, &NoiseModel::noiseless(), &mut r).unwrap();
    let p = PauliString::from_sparse(3, &[(0, Pauli::Y), (2, Pauli::X)], 0.5).unwrap();
    // support order [0, 2]: local bit 0 = qubit 0
    let (y, x) = (Pauli::Y.matrix(), Pauli::X.matrix());
    let m: Vec<Vec<C64>> = (0..4).map(|a| (0..4).map(|b| x[a >> 1][b >> 1] * y[a & 1][b & 1] * 0.5).collect()).collect();
    let dense = LocalObservable::dense(vec![0, 2], m).unwrap();
    let pauli = LocalObservable::Pauli(p);
    for rec in &set.records {
        assert!((dense.single_shot(rec) - pauli.single_shot(rec)).abs() < 1e-12);
    }
    assert!((dense.operator_norm() - 0.5).abs() < 1e-12);
}

#[test]
fn non_hermitian_dense_is_rejected() {
    let z = C64::new(0.0, 0.0);
    let m = vec![vec![z, C64::new(1.0, 0.0)], vec![z, z]];
    assert!(matches!(LocalObservable::dense(vec![0], m), Err(ShadowError::NotHermitian)));
}

#[test]
fn median_of_means_tracks_mean() {
    let s = StateVector::zero(1).unwrap();
    let set = acquire(&s, 20_000, &NoiseModel::noiseless(), &mut rng(12)).unwrap();
    let m = estimate_median_of_means(&set, &z_obs(1, 0), 11).unwrap();
    assert!((m - 1.0).abs() < 0.1);
}

#[test]
fn file_round_trip_is_lossless() {
    let mut r = rng(13);
    let mut set = acquire(&random_state(3, &mut r), 25, &NoiseModel::new(0.0, 0.0, 0.02).unwrap(), &mut r).unwrap();
    set.meta.seed = Some(13);
    set.meta.state_desc = "random".into();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.jsonl");
    save(&set, &path).unwrap();
    assert_eq!(load(&path).unwrap(), set);
}

#[test]
fn malformed_files_are_rejected() {
    let set = single(vec![identity_record(2, 1)]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.jsonl");
    save(&set, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("\"n\":2", "\"n\":3", 1)).unwrap();
    assert!(matches!(load(&path), Err(ShadowError::Format(_))));
    std::fs::write(&path, text.replacen("\"version\":1", "\"version\":2", 1)).unwrap();
    assert!(matches!(load(&path), Err(ShadowError::Version(2))));
}

#[test]
fn euler_reconstruction_is_exact_up_to_phase() {
    let mut r = rng(14);
    for _ in 0..1000 {
        let u = haar_single_qubit(&mut r);
        let rec = ShadowRecord::from_unitaries(0, &[u]);
        let d = mat::phase_distance2(&rec.unitary(0), &u);
        assert!(d < 1e-12, "{d} {u:?} {:?}", rec.angles);
        assert!(mat::unitarity_error2(&rec.unitary(0)) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn single_shot_variance_respects_bound(seed in any::<u64>(), a in 0usize..4, b in 0usize..4) {
        let mut r = rng(seed);
        let s = random_state(2, &mut r);
        let p = PauliString::new(vec![Pauli::from_index(a), Pauli::from_index(b)], 1.0).unwrap();
        let obs = LocalObservable::Pauli(p);
        let set = acquire(&s, 4000, &NoiseModel::noiseless(), &mut r).unwrap();
        let e = estimate(&set, &obs).unwrap();
        let bound = 4f64.powi(obs.locality() as i32) * obs.operator_norm().powi(2);
        // second moment of ô never exceeds 3^k, so the sample variance has bounded spread
        let slack = 5.0 * 9f64.powi(obs.locality() as i32) / (4000f64).sqrt();
        prop_assert!(e.variance <= bound + slack);
    }

    #[test]
    fn snapshot_overlap_range(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = ShadowRecord::from_unitaries(1, &[haar_single_qubit(&mut r)]);
        let b = ShadowRecord::from_unitaries(0, &[haar_single_qubit(&mut r)]);
        let v = snapshot_overlap(&a, &b, 0);
        prop_assert!((-4.0 - 1e-12..=5.0 + 1e-12).contains(&v));
    }
}
