use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::sim::{
    circuit_unitary, expectation, run_circuit, Circuit, NoiseModel, PauliString, StateVector,
};

fn run(circuit: &Circuit) -> StateVector {
    let zero = StateVector::zero(circuit.n_qubits()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    run_circuit(&zero, circuit, &NoiseModel::noiseless(), &mut rng).unwrap().0
}

fn apply_string(p: &PauliString, v: &[C64]) -> Vec<C64> {
    let s = StateVector::from_unnormalized(p.n_qubits(), v.to_vec());
    let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let mut s = s.unwrap();
    s.apply_pauli_string(p).unwrap();
    s.amplitudes().iter().map(|a| a * norm * p.coeff()).collect()
}

/// Many-body ground state of `Σ h_ij a_i† a_j` in the half-filled sector by dense ED.
fn ed_ground_state(h: &DMatrix<f64>) -> StateVector {
    let n = h.nrows();
    let dim = 1usize << n;
    let sector: Vec<usize> = (0..dim).filter(|k| k.count_ones() as usize == n / 2).collect();
    let mut terms: Vec<PauliString> = Vec::new();
    for i in 0..n {
        for j in i..n {
            let w = if i == j { h[(i, i)] } else { 2.0 * h[(i, j)] };
            if w != 0.0 {
                for p in jw_observable(i, j, n).unwrap() {
                    let c = p.coeff() * w;
                    terms.push(p.with_coeff(c));
                }
            }
        }
    }
    let mut hm = DMatrix::<f64>::zeros(sector.len(), sector.len());
    for (col, &k) in sector.iter().enumerate() {
        let mut e = vec![C64::new(0.0, 0.0); dim];
        e[k] = C64::new(1.0, 0.0);
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for t in &terms {
            for (o, a) in out.iter_mut().zip(apply_string(t, &e)) {
                *o += a;
            }
        }
        for (row, &k2) in sector.iter().enumerate() {
            assert!(out[k2].im.abs() < 1e-12);
            hm[(row, col)] = out[k2].re;
        }
    }
    let eig = SymmetricEigen::new(hm);
    let g = eig.eigenvalues.imin();
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    for (row, &k) in sector.iter().enumerate() {
        amps[k] = C64::new(eig.eigenvectors[(row, g)], 0.0);
    }
    StateVector::from_unnormalized(n, amps).unwrap()
}

fn random_spec(n: usize, seed: u64) -> HoppingSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    HoppingSpec::uniform(n, &mut rng, Some(seed)).unwrap()
}

fn mat4_of(circuit: &Circuit) -> DMatrix<C64> {
    let cols = circuit_unitary(circuit).unwrap();
    DMatrix::from_fn(4, 4, |r, c| cols[c].amplitudes()[r])
}

fn to_dm(m: &crate::sim::Mat4) -> DMatrix<C64> {
    DMatrix::from_fn(4, 4, |r, c| m[r][c])
}

#[test]
fn block_gates_match_givens_matrix() {
    for &theta in &[0.0, 0.3, -1.1, std::f64::consts::FRAC_PI_4, 2.5] {
        let mut c = Circuit::new(2);
        c.extend_gates(givens_block_gates(0, theta));
        let diff = (mat4_of(&c) - to_dm(&givens_matrix(theta))).camax();
        assert!(diff < 1e-12, "theta {theta}: {diff}");
    }
}

#[test]
fn givens_matrix_is_exponential_of_hopping_generator() {
    // K = (|2⟩⟨1| − |1⟩⟨2|) generates the mode rotation; exp(θK) in closed form vs a Taylor series
    let theta = 0.73;
    let mut k = DMatrix::<C64>::zeros(4, 4);
    k[(2, 1)] = C64::new(theta, 0.0);
    k[(1, 2)] = C64::new(-theta, 0.0);
    let mut term = DMatrix::<C64>::identity(4, 4);
    let mut sum = term.clone();
    for m in 1..40 {
        term = &term * &k / C64::new(m as f64, 0.0);
        sum += &term;
    }
    assert!((sum - to_dm(&givens_matrix(theta))).camax() < 1e-12);
}

#[test]
fn parity_basis_diagonalises_hopping_pair() {
    let x = crate::sim::Pauli::X.matrix();
    let y = crate::sim::Pauli::Y.matrix();
    // local index b0 + 2 b1 → kron(q1, q0)
    let kron = |a: &crate::sim::Mat2, b: &crate::sim::Mat2| {
        DMatrix::from_fn(4, 4, |r, c| a[r >> 1][c >> 1] * b[r & 1][c & 1])
    };
    let hop = (kron(&x, &x) + kron(&y, &y)) * C64::new(0.25, 0.0);
    let up = to_dm(&givens_matrix(std::f64::consts::FRAC_PI_4));
    let d = parity_eigenvalues();
    let dm = DMatrix::from_fn(4, 4, |r, c| if r == c { C64::new(d[r], 0.0) } else { C64::new(0.0, 0.0) });
    assert!((&up * dm * up.adjoint() - hop).camax() < 1e-12);
}

#[test]
fn twelve_sites_need_thirty_six_rotations() {
    let spec = random_spec(12, 5);
    let gs = ground_correlation(&build_hopping(&spec).unwrap(), 6).unwrap();
    assert_eq!(givens_decompose(&gs.q).unwrap().len(), 36);
}

#[test]
fn fock_state_has_trivial_angles() {
    let q = DMatrix::<f64>::identity(6, 3).transpose();
    let q = DMatrix::from_fn(3, 6, |r, c| q[(r, c)]);
    let net = givens_decompose(&q).unwrap();
    for r in &net.rotations {
        let m = r.theta.rem_euclid(std::f64::consts::PI);
        assert!(m.min(std::f64::consts::PI - m) < 1e-12, "{}", r.theta);
    }
}

#[test]
fn non_orthonormal_rows_are_rejected() {
    let q = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    assert!(matches!(givens_decompose(&q), Err(FermionError::NotOrthonormal(_))));
}

#[test]
fn compiled_state_matches_exact_diagonalisation() {
    for (n, seed) in [(2, 1), (4, 2), (4, 3), (6, 4), (8, 5)] {
        let h = build_hopping(&random_spec(n, seed)).unwrap();
        let gs = ground_correlation(&h, n / 2).unwrap();
        let psi = run(&prepare_circuit(&givens_decompose(&gs.q).unwrap()));
        let f = psi.fidelity(&ed_ground_state(&h));
        assert!(f > 1.0 - 1e-10, "n {n}: fidelity {f}");
    }
}

#[test]
fn jw_strings_reproduce_correlation_matrix() {
    for (n, seed) in [(4, 11), (6, 12), (8, 13)] {
        let gs = ground_correlation(&build_hopping(&random_spec(n, seed)).unwrap(), n / 2).unwrap();
        let psi = run(&prepare_circuit(&givens_decompose(&gs.q).unwrap()));
        for i in 0..n {
            for j in i..n {
                let v: f64 = jw_observable(i, j, n).unwrap().iter().map(|p| expectation(&psi, p).unwrap()).sum();
                assert!((v - gs.c[(i, j)]).abs() < 1e-8, "({i},{j}) {v} vs {}", gs.c[(i, j)]);
            }
        }
    }
}

#[test]
fn jw_observable_shapes() {
    let obs = jw_observable(1, 4, 6).unwrap();
    assert_eq!(obs.len(), 2);
    for p in &obs {
        assert_eq!(p.letters().iter().filter(|&&l| l == crate::sim::Pauli::Z).count(), 2);
        assert_eq!(p.coeff(), 0.25);
    }
    let mut one = StateVector::basis(3, 0b010).unwrap();
    let v: f64 = jw_observable(1, 1, 3).unwrap().iter().map(|p| expectation(&one, p).unwrap()).sum();
    assert_eq!(v, 1.0);
    one = StateVector::from_unnormalized(
        2,
        vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 0.0)],
    )
    .unwrap();
    let v: f64 = jw_observable(0, 1, 2).unwrap().iter().map(|p| expectation(&one, p).unwrap()).sum();
    assert!((v + 0.5).abs() < 1e-12);
    assert!(jw_observable(2, 1, 3).is_err());
    assert!(jw_observable(0, 3, 3).is_err());
}

#[test]
fn recompiled_parity_layer_matches_explicit_layer() {
    for (n, pairs) in [(4, vec![1]), (4, vec![0, 2]), (6, vec![0, 2, 4]), (6, vec![3])] {
        let gs = ground_correlation(&build_hopping(&random_spec(n, 40 + n as u64)).unwrap(), n / 2).unwrap();
        let net = givens_decompose(&gs.q).unwrap();
        let mut explicit = prepare_circuit(&net);
        for &p in &pairs {
            explicit.extend_gates(givens_block_gates(p, -std::f64::consts::FRAC_PI_4));
        }
        let re = recompile_parity(&net, &pairs).unwrap();
        assert_eq!(re.len(), net.len());
        let f = run(&prepare_circuit(&re)).fidelity(&run(&explicit));
        assert!(f > 1.0 - 1e-10, "pairs {pairs:?}: {f}");
    }
}

#[test]
fn empty_pair_set_preserves_state() {
    let gs = ground_correlation(&build_hopping(&random_spec(6, 9)).unwrap(), 3).unwrap();
    let net = givens_decompose(&gs.q).unwrap();
    let re = recompile_parity(&net, &[]).unwrap();
    assert!(run(&prepare_circuit(&re)).fidelity(&run(&prepare_circuit(&net))) > 1.0 - 1e-10);
}

#[test]
fn overlapping_pairs_are_rejected() {
    let gs = ground_correlation(&build_hopping(&random_spec(4, 9)).unwrap(), 2).unwrap();
    let net = givens_decompose(&gs.q).unwrap();
    assert!(matches!(recompile_parity(&net, &[0, 1]), Err(FermionError::BadPairs)));
    assert!(matches!(recompile_parity(&net, &[3]), Err(FermionError::BadPairs)));
}

#[test]
fn settings_cover_each_pair_once() {
    for n in [2, 4, 6, 12] {
        let settings = measurement_settings(n).unwrap();
        assert_eq!(settings.len(), n);
        let mut seen = vec![vec![0; n]; n];
        for s in &settings[1..] {
            let mut sorted = s.perm.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..n).collect::<Vec<_>>());
            for &p in &s.pairs {
                seen[s.perm[p]][s.perm[p + 1]] += 1;
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                assert_eq!(seen[i][j], 1, "pair ({i},{j})");
            }
        }
    }
}

#[test]
fn post_selection_keeps_fixed_weight() {
    let h = crate::sim::Histogram::from_labels(2, &[("01", 5), ("11", 3)]).unwrap();
    let (kept, r) = post_select(&h, 1).unwrap();
    assert_eq!(kept.total(), 5);
    assert_eq!(kept.get(crate::sim::run::string_to_bits("01", 2).unwrap()), 5);
    assert!((r - 5.0 / 8.0).abs() < 1e-15);
    assert!(matches!(post_select(&h, 0), Err(FermionError::EmptyPostSelection)));
}

#[test]
fn exact_estimate_reproduces_correlation_matrix() {
    for mode in [true, false] {
        let spec = random_spec(8, 21);
        let gs = ground_correlation(&build_hopping(&spec).unwrap(), 4).unwrap();
        let opts = EstimateOptions {
            exact: true,
            flags: MitigationFlags { post_select: true, mcweeny: false, recompile: mode },
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let est = estimate_correlation_matrix(&spec, &opts, &NoiseModel::noiseless(), &mut rng).unwrap();
        assert!((&est.c - &gs.c).camax() < 1e-12);
        assert!(est.retention.iter().all(|&r| (r - 1.0).abs() < 1e-12));
        assert!((&est.c - est.c.transpose()).camax() == 0.0);
    }
}

#[test]
fn noiseless_shots_conserve_particle_number() {
    let spec = random_spec(6, 3);
    let opts = EstimateOptions { shots: 2000, trajectories: 1, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data = acquire(&spec, &opts, &NoiseModel::noiseless(), &mut rng).unwrap();
    for sd in &data {
        assert!(sd.counts.counts.keys().all(|k| k.count_ones() == 3));
    }
}

#[test]
fn readout_retention_follows_binomial_model() {
    let spec = random_spec(12, 4);
    let noise = NoiseModel::new(0.0, 0.0, 0.01).unwrap();
    let opts = EstimateOptions { shots: 20_000, trajectories: 1, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data = acquire(&spec, &opts, &noise, &mut rng).unwrap();
    let (_, r) = post_select(&data[0].counts, 6).unwrap();
    // weight-preserving double flips add 36·p² on top of (1−p)^12
    let expect = 0.99f64.powi(12) + 36.0 * 0.99f64.powi(10) * 1e-4;
    let sigma = (expect * (1.0 - expect) / 20_000.0).sqrt();
    assert!((r - expect).abs() < 5.0 * sigma, "{r} vs {expect}");
}

#[test]
fn mitigation_reduces_error_at_six_sites() {
    let noise = NoiseModel::new(0.001, 0.01, 0.01).unwrap();
    let mut raw_err = 0.0;
    let mut mit_err = 0.0;
    for seed in 0..4 {
        let spec = random_spec(6, 100 + seed);
        let gs = ground_correlation(&build_hopping(&spec).unwrap(), 3).unwrap();
        let opts = EstimateOptions { shots: 20_000, trajectories: 50, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = acquire(&spec, &opts, &noise, &mut rng).unwrap();
        let raw = assemble(6, &data, MitigationFlags { post_select: false, mcweeny: false, recompile: true }, 100, 1e-10).unwrap();
        let mit = assemble(6, &data, MitigationFlags::all(), 100, 1e-10).unwrap();
        raw_err += (&raw.c - &gs.c).norm();
        mit_err += (&mit.c - &gs.c).norm();
    }
    assert!(mit_err < raw_err, "mitigated {mit_err} vs raw {raw_err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn compiled_circuit_reproduces_slater_state(n in prop::sample::select(vec![2usize, 4, 6]), seed in any::<u64>()) {
        let h = build_hopping(&random_spec(n, seed)).unwrap();
        let gs = ground_correlation(&h, n / 2).unwrap();
        let net = givens_decompose(&gs.q).unwrap();
        prop_assert_eq!(net.len(), (n / 2) * (n - n / 2));
        let psi = run(&prepare_circuit(&net));
        for i in 0..n {
            let v: f64 = jw_observable(i, i, n).unwrap().iter().map(|p| expectation(&psi, p).unwrap()).sum();
            prop_assert!((v - gs.c[(i, i)]).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_ground_state_is_projector(n in prop::sample::select(vec![2usize, 4, 8, 12]), seed in any::<u64>()) {
        let gs = ground_correlation(&build_hopping(&random_spec(n, seed)).unwrap(), n / 2).unwrap();
        prop_assert!((&gs.c * &gs.c - &gs.c).norm() < 1e-10);
        prop_assert!((gs.c.trace() - (n / 2) as f64).abs() < 1e-10);
    }

    #[test]
    fn mcweeny_residual_never_grows(diag in prop::collection::vec(-0.4f64..1.4, 4), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = HoppingSpec::uniform(4, &mut rng, None).unwrap();
        let eig = SymmetricEigen::new(build_hopping(&spec).unwrap());
        let c = &eig.eigenvectors * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)) * eig.eigenvectors.transpose();
        let mut cur = c;
        let mut prev = (&cur * &cur - &cur).norm();
        for _ in 0..60 {
            if prev <= 1e-10 { break; }
            let out = mcweeny(&cur, 1, 0.0).unwrap();
            prop_assert!(out.residual < prev);
            prev = out.residual;
            cur = out.c;
        }
    }
}
