//! Continuous algebraic Riccati equation solver and LQR gain synthesis.
//!
//! The CARE `AᵀP + PA - P B R⁻¹ Bᵀ P + Q = 0` is solved through the matrix
//! sign function of the Hamiltonian with Frobenius-norm scaling; the
//! stabilizing solution spans the stable invariant subspace. The contract is
//! the residual bound and the Hurwitz closed loop, not the algorithm.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MAX_SIGN_ITERS: usize = 120;

/// Frobenius norm of the CARE residual for a candidate solution.
pub fn care_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> f64 {
    let r_inv = r.clone().try_inverse().expect("R must be invertible");
    let g = b * r_inv * b.transpose();
    (a.transpose() * p + p * a - p * &g * p + q).norm()
}

/// Stabilizing solution of the continuous algebraic Riccati equation.
pub fn solve_care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::NotStabilizable("dimension mismatch".into()));
    }
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotStabilizable("R not invertible".into()))?;
    let g = b * &r_inv * b.transpose();

    // Hamiltonian [[A, -G], [-Q, -Aᵀ]]
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    // sign iteration Z ← ½(μZ + (μZ)⁻¹) with norm scaling
    let mut z = h;
    let mut converged = false;
    for _ in 0..MAX_SIGN_ITERS {
        let z_inv = z
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotStabilizable("Hamiltonian became singular".into()))?;
        let mu = (z_inv.norm() / z.norm()).sqrt();
        let z_next = 0.5 * (mu * &z + z_inv / mu);
        let delta = (&z_next - &z).norm() / z_next.norm().max(1e-300);
        z = z_next;
        if delta < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotStabilizable("sign iteration did not converge".into()));
    }

    // stable invariant subspace = range of (I - sign(H))/2
    let w = (DMatrix::identity(2 * n, 2 * n) - &z) * 0.5;
    let svd = w.svd(true, false);
    let u = svd.u.as_ref().expect("svd with u requested");
    let v1 = u.view((0, 0), (n, n)).clone_owned();
    let v2 = u.view((n, 0), (n, n)).clone_owned();
    let v1_inv = v1
        .try_inverse()
        .ok_or_else(|| Error::NotStabilizable("stable subspace not a graph over the state".into()))?;
    let p = v2 * v1_inv;
    let p = 0.5 * (&p + &p.transpose());

    let res = care_residual(a, b, q, r, &p);
    if !res.is_finite() || res > 1e-8 {
        return Err(Error::NotStabilizable(format!("CARE residual {res:e}")));
    }
    Ok(p)
}

/// LQR gain `K = R⁻¹BᵀP`; verifies that `A - BK` is Hurwitz.
pub fn lqr_gain(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let p = solve_care(a, b, q, r)?;
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotStabilizable("R not invertible".into()))?;
    let k = r_inv * b.transpose() * &p;

    let closed = a - b * &k;
    let eigs = closed.complex_eigenvalues();
    let max_re = eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    if !(max_re < 0.0) {
        return Err(Error::NotStabilizable(format!(
            "closed loop not Hurwitz, max Re(λ) = {max_re}"
        )));
    }
    Ok(k)
}
