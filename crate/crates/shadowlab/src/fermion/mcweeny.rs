use nalgebra::{DMatrix, SymmetricEigen};

use super::{FermionError, FermionResult};

#[derive(Clone, Debug)]
pub struct McWeenyOutcome {
    pub c: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `‖C² − C‖_F` after the last iteration.
    pub residual: f64,
    /// `Tr C_final − Tr C_initial`.
    pub trace_drift: f64,
}

fn idempotency_residual(c: &DMatrix<f64>) -> f64 {
    (c * c - c).norm()
}

/// Iterates `C ← C²(3I − 2C)` until `‖C² − C‖_F ≤ tol`.
pub fn mcweeny(c: &DMatrix<f64>, max_iter: usize, tol: f64) -> FermionResult<McWeenyOutcome> {
    let n = c.nrows();
    if c.ncols() != n || (c - c.transpose()).amax() > 1e-9 {
        return Err(FermionError::NotSymmetric);
    }
    let mut cur = (c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(cur.clone());
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&e| !(e > -0.5 && e < 1.5)) {
        return Err(FermionError::Divergence(bad));
    }
    let trace0 = cur.trace();
    let three = DMatrix::<f64>::identity(n, n) * 3.0;
    let mut residual = idempotency_residual(&cur);
    let mut iterations = 0;
    while residual > tol && iterations < max_iter {
        let sq = &cur * &cur;
        let next = &sq * (&three - &cur * 2.0);
        cur = (&next + next.transpose()) * 0.5;
        iterations += 1;
        residual = idempotency_residual(&cur);
        if !residual.is_finite() {
            return Err(FermionError::Divergence(f64::NAN));
        }
    }
    Ok(McWeenyOutcome {
        trace_drift: cur.trace() - trace0,
        converged: residual <= tol,
        c: cur,
        iterations,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    #[test]
    fn scalar_steps() {
        let one = mcweeny(&scalar(0.6), 1, 0.0).unwrap();
        assert!((one.c[(0, 0)] - 0.648).abs() < 1e-12);
        let one = mcweeny(&scalar(0.4), 1, 0.0).unwrap();
        assert!((one.c[(0, 0)] - 0.352).abs() < 1e-12);
        let hi = mcweeny(&scalar(0.6), 100, 1e-10).unwrap();
        assert!(hi.converged && (hi.c[(0, 0)] - 1.0).abs() < 1e-9);
        let lo = mcweeny(&scalar(0.4), 100, 1e-10).unwrap();
        assert!(lo.converged && lo.c[(0, 0)].abs() < 1e-9);
    }

    #[test]
    fn projector_is_fixed_point() {
        let p = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        let out = mcweeny(&p, 100, 1e-10).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.converged);
    }

    #[test]
    fn outside_basin_is_rejected() {
        assert!(matches!(mcweeny(&scalar(1.7), 10, 1e-10), Err(FermionError::Divergence(_))));
        assert!(matches!(mcweeny(&scalar(-0.6), 10, 1e-10), Err(FermionError::Divergence(_))));
    }

    #[test]
    fn residual_decreases_monotonically() {
        let c = DMatrix::from_row_slice(3, 3, &[0.9, 0.1, 0.05, 0.1, 0.2, -0.1, 0.05, -0.1, 0.7]);
        let mut prev = idempotency_residual(&c);
        let mut cur = c.clone();
        for _ in 0..10 {
            let out = mcweeny(&cur, 1, 0.0).unwrap();
            if prev <= 1e-10 {
                break;
            }
            assert!(out.residual < prev);
            prev = out.residual;
            cur = out.c;
        }
    }
}
