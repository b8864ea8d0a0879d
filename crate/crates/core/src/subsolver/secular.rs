//! Global minimizer of the restricted cubic
//!
//! `phi(y) = gnorm * y_1 + y^T T y / 2 + (sigma/3) ||y||^3`
//!
//! over R^k, where T is the symmetric tridiagonal produced by Lanczos.
//!
//! The minimizer is characterized by `(T + lambda I) y = -gnorm e_1` with
//! `lambda = sigma ||y||` and `T + lambda I` positive semidefinite. We solve
//! the secular equation `psi(lambda) = ||y(lambda)|| - lambda/sigma = 0` by
//! safeguarded Newton/bisection over `lambda in (max(0, -lambda_min(T)), inf)`,
//! working in the eigenbasis of T.

use nalgebra::{DMatrix, DVector};

use crate::linalg::sym_eig;
use crate::{Error, Result};

/// Solution of the restricted cubic subproblem.
#[derive(Debug, Clone)]
pub struct RestrictedCubic {
    /// Coefficients of the minimizer in the Lanczos basis.
    pub y: DVector<f64>,
    /// The multiplier `sigma * ||y||`.
    pub lambda: f64,
}

/// Dense symmetric tridiagonal from diagonal `alpha` and subdiagonal `beta`.
pub fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let k = alpha.len();
    assert!(beta.len() + 1 >= k, "need k-1 subdiagonal entries");
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i + 1, i)] = beta[i];
            t[(i, i + 1)] = beta[i];
        }
    }
    t
}

/// Minimize the restricted cubic given the tridiagonal coefficients.
///
/// Stops when `|sigma ||y|| - lambda| <= tol * max(1, lambda)`; errors if the
/// secular iteration has not met that after 200 steps.
pub fn min_restricted_cubic(
    alpha: &[f64],
    beta: &[f64],
    gnorm: f64,
    sigma: f64,
    tol: f64,
) -> Result<RestrictedCubic> {
    if !(gnorm > 0.0) {
        return Err(Error::InvalidArgument("gnorm must be positive".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument("sigma must be positive".into()));
    }
    let k = alpha.len();
    let t = tridiagonal(alpha, beta);
    let (evals, evecs) = sym_eig(&t);

    // Components of -gnorm e_1 in the eigenbasis.
    let mut c = DVector::zeros(k);
    for i in 0..k {
        c[i] = -gnorm * evecs[(0, i)];
    }

    let d_min = evals[0];
    let lambda_floor = (-d_min).max(0.0);

    // ||y(lambda)|| with y(lambda) = (T + lambda I)^-1 (-gnorm e_1).
    let y_norm = |lambda: f64| -> f64 {
        let mut sum = 0.0;
        for i in 0..k {
            let denom = evals[i] + lambda;
            if denom > 0.0 {
                sum += (c[i] / denom).powi(2);
            }
        }
        sum.sqrt()
    };

    let assemble = |lambda: f64| -> DVector<f64> {
        let mut y_eig = DVector::zeros(k);
        for i in 0..k {
            let denom = evals[i] + lambda;
            if denom > 1e-14 * (1.0 + lambda) {
                y_eig[i] = c[i] / denom;
            }
        }
        &evecs * y_eig
    };

    // The secular function psi(lambda) = ||y(lambda)|| - lambda/sigma is
    // strictly decreasing on (lambda_floor, inf). Bracket by doubling, then
    // bisect with Newton acceleration. The hard case (no weight on the
    // bottom eigenspace, or a root within ulps of the pole) surfaces as the
    // bracket collapsing onto the floor and is resolved by fixing the
    // bottom-mode coefficient so sigma ||y|| = lambda holds exactly.
    let psi = |lambda: f64| y_norm(lambda) - lambda / sigma;
    let mut lo = lambda_floor + 1e-14 * (1.0 + lambda_floor);
    let mut hi = (lambda_floor + 1.0).max(2.0 * lambda_floor) + sigma * gnorm.sqrt();
    let mut grow = 0;
    while psi(hi) > 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 400 {
            return Err(Error::Convergence {
                msg: "secular bracket did not close".into(),
                lo,
                hi,
            });
        }
    }

    let mut lambda = 0.5 * (lo + hi);
    for iter in 0..200 {
        let norm = y_norm(lambda);
        let resid = sigma * norm - lambda;
        if resid.abs() <= tol * lambda.max(1.0) {
            return Ok(RestrictedCubic {
                y: assemble(lambda),
                lambda,
            });
        }
        if resid > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.max(1.0) {
            // Bracket exhausted the grid of representable multipliers. Take
            // the side where T + lambda I is safely positive semidefinite and
            // top up the bottom-eigenmode coefficient so the coupling
            // sigma ||y|| = lambda is exact; the stationarity defect stays
            // confined to the nearly singular mode.
            let lambda = hi;
            let mut y_eig = DVector::zeros(k);
            for i in 0..k {
                let denom = evals[i] + lambda;
                if denom > 1e-14 * (1.0 + lambda) {
                    y_eig[i] = c[i] / denom;
                }
            }
            let target2 = (lambda / sigma).powi(2);
            let rest2 = y_eig.norm_squared() - y_eig[0] * y_eig[0];
            let head2 = target2 - rest2;
            if head2 >= 0.0 {
                let sign = if c[0] != 0.0 { c[0].signum() } else { 1.0 };
                y_eig[0] = head2.sqrt() * sign;
            } else {
                // Even without bottom mass the norm overshoots: scale down.
                let scale = (target2 / y_eig.norm_squared().max(1e-300)).sqrt();
                y_eig *= scale;
            }
            let y = &evecs * y_eig;
            return Ok(RestrictedCubic { y, lambda });
        }
        // Newton on psi, safeguarded; forced bisection every third step keeps
        // the bracket shrinking geometrically.
        let mut dnorm = 0.0;
        for i in 0..k {
            let denom = evals[i] + lambda;
            if denom > 0.0 {
                dnorm += -(c[i] * c[i]) / denom.powi(3);
            }
        }
        let dpsi = if norm > 0.0 { dnorm / norm } else { 0.0 } - 1.0 / sigma;
        let newton = lambda - (norm - lambda / sigma) / dpsi;
        lambda = if iter % 3 != 2 && dpsi < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::Convergence {
        msg: "secular iteration exceeded 200 steps".into(),
        lo,
        hi,
    })
}
