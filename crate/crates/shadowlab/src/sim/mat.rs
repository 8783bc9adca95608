//! Small fixed-size complex matrices used by the gate kernels.

use num_complex::Complex64 as C64;

pub type Mat2 = [[C64; 2]; 2];
pub type Mat4 = [[C64; 4]; 4];

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn identity2() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn hadamard() -> Mat2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [[C64::new(s, 0.0), C64::new(s, 0.0)], [C64::new(s, 0.0), C64::new(-s, 0.0)]]
}

/// `exp(-i θ Y / 2)`.
pub fn ry(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
}

/// `exp(-i θ Z / 2)`.
pub fn rz(theta: f64) -> Mat2 {
    [[C64::from_polar(1.0, -theta / 2.0), ZERO], [ZERO, C64::from_polar(1.0, theta / 2.0)]]
}

/// ZYZ parametrisation `U3(θ, φ, λ) = Rz(φ) Ry(θ) Rz(λ)` up to the global phase `e^{i(φ+λ)/2}`.
pub fn u3(theta: f64, phi: f64, lambda: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [C64::new(c, 0.0), -C64::from_polar(s, lambda)],
        [C64::from_polar(s, phi), C64::from_polar(c, phi + lambda)],
    ]
}

/// Inverse of [`u3`]: angles `(θ, φ, λ)` with `U = e^{iα} U3(θ, φ, λ)` for some α.
pub fn zyz_angles(u: &Mat2) -> (f64, f64, f64) {
    let c = u[0][0].norm();
    let s = u[1][0].norm();
    let theta = 2.0 * s.atan2(c);
    let (phi, lambda) = if s < 1e-300 {
        (u[1][1].arg() - u[0][0].arg(), 0.0)
    } else if c < 1e-300 {
        // only φ − λ is defined; fix λ = 0 so that α = arg(−U01)
        (u[1][0].arg() - (-u[0][1]).arg(), 0.0)
    } else {
        let alpha = u[0][0].arg();
        (u[1][0].arg() - alpha, (-u[0][1]).arg() - alpha)
    };
    (theta, wrap(phi), wrap(lambda))
}

fn wrap(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r - two_pi
    } else {
        r
    }
}

pub fn matmul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn dagger2(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// Largest entrywise deviation of `U†U` from the identity.
pub fn unitarity_error2(u: &Mat2) -> f64 {
    let p = matmul2(&dagger2(u), u);
    let mut err: f64 = 0.0;
    for (i, row) in p.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { ONE } else { ZERO };
            err = err.max((v - target).norm());
        }
    }
    err
}

/// Entrywise distance between two 2×2 matrices after removing the relative global phase.
pub fn phase_distance2(a: &Mat2, b: &Mat2) -> f64 {
    let mut overlap = ZERO;
    for i in 0..2 {
        for j in 0..2 {
            overlap += a[i][j].conj() * b[i][j];
        }
    }
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
    let mut err: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            err = err.max((a[i][j] * phase - b[i][j]).norm());
        }
    }
    err
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn u3_is_unitary() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let u = u3(rng.gen::<f64>() * 3.0, rng.gen::<f64>() * 6.0, rng.gen::<f64>() * 6.0);
            assert!(unitarity_error2(&u) < 1e-14);
        }
    }

    #[test]
    fn zyz_round_trip_including_edges() {
        let cases = [
            (0.0, 0.3, 0.0),
            (std::f64::consts::PI, 0.4, -1.1),
            (1.2, -2.0, 0.7),
            (0.5, 3.0, 3.0),
        ];
        for (t, p, l) in cases {
            let u = u3(t, p, l);
            let (t2, p2, l2) = zyz_angles(&u);
            assert!(phase_distance2(&u, &u3(t2, p2, l2)) < 1e-13, "{t} {p} {l}");
        }
    }

    #[test]
    fn ry_rz_compose_to_u3() {
        let (t, p, l) = (0.7, 1.3, -0.4);
        let prod = matmul2(&rz(p), &matmul2(&ry(t), &rz(l)));
        assert!(phase_distance2(&prod, &u3(t, p, l)) < 1e-14);
    }
}
