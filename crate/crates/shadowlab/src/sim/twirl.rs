use rand::Rng;

use super::circuit::{Circuit, Gate, Op};
use super::pauli::Pauli;
use super::{SimError, SimResult};

/// Image `G P G†` of a two-qubit Pauli `(p_a, p_b)` under CX(a→b) or CZ(a,b), up to sign.
pub fn conjugate_clifford(gate: &Gate, pa: Pauli, pb: Pauli) -> SimResult<(Pauli, Pauli)> {
    let ((xa, mut za), (mut xb, mut zb)) = (pa.bits(), pb.bits());
    match gate {
        Gate::Cx { .. } => {
            xb ^= xa;
            za ^= zb;
        }
        Gate::Cz { .. } => {
            za ^= xb;
            zb ^= xa;
        }
        _ => return Err(SimError::NonCliffordTwirl),
    }
    Ok((Pauli::from_bits(xa, za), Pauli::from_bits(xb, zb)))
}

/// Wraps every CX/CZ in a random Pauli frame `P` before and `G P G†` after.
pub fn pauli_twirl<R: Rng + ?Sized>(circuit: &Circuit, rng: &mut R) -> SimResult<Circuit> {
    let mut out = Circuit::new(circuit.n_qubits());
    let mut body = Vec::new();
    for op in circuit.ops() {
        match op {
            Op::Gate(g @ (Gate::Cx { .. } | Gate::Cz { .. })) => {
                let s = g.support();
                let pa = Pauli::from_index(rng.gen_range(0..4));
                let pb = Pauli::from_index(rng.gen_range(0..4));
                let (qa, qb) = conjugate_clifford(g, pa, pb)?;
                for (q, p) in [(s[0], pa), (s[1], pb)] {
                    if p != Pauli::I {
                        body.push(Op::Gate(Gate::pauli(q, p)));
                    }
                }
                body.push(op.clone());
                for (q, p) in [(s[0], qa), (s[1], qb)] {
                    if p != Pauli::I {
                        body.push(Op::Gate(Gate::pauli(q, p)));
                    }
                }
            }
            Op::Gate(Gate::PauliExp { paulis, .. }) if paulis.len() == 2 => {
                return Err(SimError::NonCliffordTwirl)
            }
            other => body.push(other.clone()),
        }
    }
    let mut slots = 0;
    for op in body {
        match op {
            Op::Gate(g) => {
                out.push(g);
            }
            Op::Measure { qubit, .. } => {
                out.measure(qubit);
                slots += 1;
            }
            Op::Reset { qubit } => {
                out.reset(qubit);
            }
            Op::Conditional { gate, parity_of } => {
                out.conditional(gate, parity_of);
            }
        }
    }
    debug_assert_eq!(slots, circuit.n_slots());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::run::{circuit_unitary, unitary_distance_up_to_phase};
    use crate::sim::haar::haar_single_qubit;
    use rand::SeedableRng;

    #[test]
    fn cx_rules() {
        let cx = Gate::cx(0, 1);
        assert_eq!(conjugate_clifford(&cx, Pauli::I, Pauli::I).unwrap(), (Pauli::I, Pauli::I));
        assert_eq!(conjugate_clifford(&cx, Pauli::X, Pauli::I).unwrap(), (Pauli::X, Pauli::X));
        assert_eq!(conjugate_clifford(&cx, Pauli::I, Pauli::Z).unwrap(), (Pauli::Z, Pauli::Z));
        assert!(conjugate_clifford(&Gate::h(0), Pauli::X, Pauli::I).is_err());
    }

    fn random_circuit(rng: &mut impl Rng, n: usize, len: usize) -> Circuit {
        let mut c = Circuit::new(n);
        for _ in 0..len {
            let a = rng.gen_range(0..n);
            let b = (a + rng.gen_range(1..n)) % n;
            match rng.gen_range(0..3) {
                0 => c.push(Gate::single(a, haar_single_qubit(rng))),
                1 => c.push(Gate::cx(a, b)),
                _ => c.push(Gate::cz(a, b)),
            };
        }
        c
    }

    #[test]
    fn twirled_unitary_matches_original() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let c = random_circuit(&mut rng, 3, 12);
            let t = pauli_twirl(&c, &mut rng).unwrap();
            let d = unitary_distance_up_to_phase(&circuit_unitary(&c).unwrap(), &circuit_unitary(&t).unwrap());
            assert!(d < 1e-10, "{d}");
        }
    }

    #[test]
    fn rejects_two_qubit_rotation() {
        let mut c = Circuit::new(2);
        c.push(Gate::PauliExp { theta: 0.3, paulis: vec![(0, Pauli::X), (1, Pauli::X)] });
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert!(pauli_twirl(&c, &mut rng).is_err());
    }
}
