use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::mat::Mat2;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random element of U(2): Gram–Schmidt on a complex Gaussian matrix.
///
/// Gram–Schmidt makes the diagonal of the triangular factor real and positive, which is
/// exactly the phase fixing needed for the Q factor to be Haar distributed.
pub fn haar_single_qubit<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    loop {
        let (a, b, c, d) = (gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng));
        // columns (a, c) and (b, d)
        let n1 = (a.norm_sqr() + c.norm_sqr()).sqrt();
        if n1 < 1e-12 {
            continue;
        }
        let (q00, q10) = (a / n1, c / n1);
        let proj = q00.conj() * b + q10.conj() * d;
        let (r0, r1) = (b - proj * q00, d - proj * q10);
        let n2 = (r0.norm_sqr() + r1.norm_sqr()).sqrt();
        if n2 < 1e-12 {
            continue;
        }
        return [[q00, r0 / n2], [q10, r1 / n2]];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::mat::{matmul2, unitarity_error2};
    use rand::SeedableRng;

    #[test]
    fn unitary() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert!(unitarity_error2(&haar_single_qubit(&mut rng)) < 1e-12);
        }
    }

    #[test]
    fn first_and_second_moments() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000;
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..draws {
            let p = haar_single_qubit(&mut rng)[0][0].norm_sqr();
            m1 += p;
            m2 += p * p;
        }
        m1 /= draws as f64;
        m2 /= draws as f64;
        assert!((m1 - 0.5).abs() < 0.01, "{m1}");
        assert!((m2 - 1.0 / 3.0).abs() < 0.01, "{m2}");
    }

    #[test]
    fn left_invariance_of_moments() {
        // V·U must have the same |U00|² law; compare the first moment for a fixed V.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let v = crate::sim::mat::u3(1.1, 0.3, -0.8);
        let draws = 50_000;
        let mut m1 = 0.0;
        for _ in 0..draws {
            m1 += matmul2(&v, &haar_single_qubit(&mut rng))[0][0].norm_sqr();
        }
        assert!((m1 / draws as f64 - 0.5).abs() < 0.01);
    }
}
