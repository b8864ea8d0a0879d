//! Reference solvers emitting the same trace schema as the cubic-regularized
//! solver: a Riemannian trust-region method with Steihaug-Toint truncated CG,
//! and retraction-based gradient descent with Armijo backtracking.

use std::time::Instant;

use crate::linalg::fdot;
use crate::manifolds::{Manifold, Point, Tangent};
use crate::problems::Problem;
use crate::trace::{IterationRecord, Termination, Trace};
use crate::{Error, Result};

/// Trust-region configuration. `delta0`/`delta_max` default to the manifold's
/// typical distance scale (`sqrt(dim)/8` and `sqrt(dim)`).
#[derive(Debug, Clone)]
pub struct RtrParams {
    pub delta0: Option<f64>,
    pub delta_max: Option<f64>,
    /// Acceptance threshold on the reduction ratio.
    pub rho_accept: f64,
    /// Truncated-CG stop: `||r_j|| <= ||r_0|| min(kappa, ||r_0||^theta_tcg)`.
    pub kappa: f64,
    pub theta_tcg: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
}

impl Default for RtrParams {
    fn default() -> Self {
        RtrParams {
            delta0: None,
            delta_max: None,
            rho_accept: 0.1,
            kappa: 0.1,
            theta_tcg: 1.0,
            grad_tol: 1e-9,
            max_iters: 1000,
        }
    }
}

impl RtrParams {
    fn resolve_radii(&self, m: &dyn Manifold) -> Result<(f64, f64)> {
        let dmax = self.delta_max.unwrap_or((m.dim() as f64).sqrt());
        let d0 = self.delta0.unwrap_or(dmax / 8.0);
        if !(d0 > 0.0 && d0 <= dmax) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < delta0 <= delta_max, got {d0} and {dmax}"
            )));
        }
        Ok((d0, dmax))
    }
}

/// Steihaug-Toint truncated CG on the quadratic model within a ball of radius
/// `delta`. Returns the step, whether the boundary was hit, the iteration
/// count and Hessian products spent.
fn truncated_cg(
    m: &dyn Manifold,
    x: &Point,
    g: &Tangent,
    hess: &dyn Fn(&Tangent) -> Tangent,
    delta: f64,
    kappa: f64,
    theta: f64,
    max_cg: usize,
) -> (Tangent, bool, usize, u64) {
    let mut eta = Tangent::zero_like(x);
    let mut r = g.clone();
    let mut d = Tangent(-&r.0);
    let r0_norm = m.norm(x, &r);
    let target = r0_norm * kappa.min(r0_norm.powf(theta));
    let mut hv_count = 0u64;

    // Positive root of ||eta + tau d|| = delta.
    let to_boundary = |eta: &Tangent, d: &Tangent| -> f64 {
        let a = fdot(&d.0, &d.0);
        let b = 2.0 * fdot(&eta.0, &d.0);
        let c = fdot(&eta.0, &eta.0) - delta * delta;
        (-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a)
    };

    let mut hit = false;
    let mut iters = 0;
    for j in 0..max_cg {
        iters = j + 1;
        let hd = hess(&d);
        hv_count += 1;
        let curv = m.inner(x, &d, &hd);
        if curv <= 0.0 {
            let tau = to_boundary(&eta, &d);
            eta = Tangent(&eta.0 + tau * &d.0);
            hit = true;
            break;
        }
        let r_sq = m.inner(x, &r, &r);
        let alpha = r_sq / curv;
        let eta_next = Tangent(&eta.0 + alpha * &d.0);
        if m.norm(x, &eta_next) >= delta {
            let tau = to_boundary(&eta, &d);
            eta = Tangent(&eta.0 + tau * &d.0);
            hit = true;
            break;
        }
        eta = eta_next;
        let r_next = Tangent(&r.0 + alpha * &hd.0);
        let rn = m.norm(x, &r_next);
        if rn <= target {
            break;
        }
        let beta = (rn * rn) / r_sq;
        d = Tangent(-&r_next.0 + beta * &d.0);
        r = r_next;
    }
    (eta, hit, iters, hv_count)
}

/// Riemannian trust-region method. The `sigma` column of the trace carries
/// the trust radius.
pub fn rtr_run(
    m: &dyn Manifold,
    prob: &Problem,
    x0: &Point,
    p: &RtrParams,
) -> Result<(Point, Trace)> {
    let (mut delta, delta_max) = p.resolve_radii(m)?;
    if !m.check_point(x0, 1e-8) {
        return Err(Error::InvalidArgument(format!(
            "x0 is not on {} within 1e-8",
            m.name()
        )));
    }
    let start = Instant::now();
    let max_cg = m.dim().min(500);

    let mut x = x0.clone();
    let mut f = prob.cost(&x);
    if !f.is_finite() {
        return Err(Error::InvalidArgument(
            "cost at the initial point is not finite".into(),
        ));
    }
    let mut grad_count = 0u64;
    let mut hess_total = 0u64;
    let mut eg = prob.egrad(&x);
    grad_count += 1;
    let mut g = m.egrad2rgrad(&x, &eg);

    let mut records = Vec::new();
    let mut points = Vec::new();
    let mut termination = Termination::MaxIters;

    for k in 0..p.max_iters {
        points.push(x.clone());
        let grad_norm = m.norm(&x, &g);
        let elapsed = start.elapsed().as_secs_f64();
        if grad_norm <= p.grad_tol {
            records.push(IterationRecord {
                k,
                f,
                grad_norm,
                sigma: delta,
                rho: None,
                step_norm: 0.0,
                accepted: false,
                inner_iters: 0,
                hessvec_count: hess_total,
                grad_count,
                time_s: elapsed,
                lambda_min_hess: None,
                f_trial: None,
                model_value: None,
            });
            termination = Termination::GradTol;
            break;
        }

        let hess = |s: &Tangent| m.ehess2rhess(&x, &eg, &prob.ehessvec(&x, s), s);
        let (step, hit_boundary, inner, hv) =
            truncated_cg(m, &x, &g, &hess, delta, p.kappa, p.theta_tcg, max_cg);
        hess_total += hv;
        let step_norm = m.norm(&x, &step);
        if step_norm == 0.0 {
            records.push(IterationRecord {
                k,
                f,
                grad_norm,
                sigma: delta,
                rho: None,
                step_norm: 0.0,
                accepted: false,
                inner_iters: inner,
                hessvec_count: hess_total,
                grad_count,
                time_s: start.elapsed().as_secs_f64(),
                lambda_min_hess: None,
                f_trial: None,
                model_value: None,
            });
            termination = Termination::ZeroStep;
            break;
        }

        // Model decrease m(0) - m(eta) = -(<g, eta> + <eta, H eta>/2).
        let h_step = hess(&step);
        hess_total += 1;
        let decrease = -(m.inner(&x, &g, &step) + 0.5 * m.inner(&x, &step, &h_step));
        let x_trial = m.retract(&x, &step);
        let f_trial = prob.cost(&x_trial);
        let rho = if !f_trial.is_finite() || decrease <= 0.0 {
            f64::NEG_INFINITY
        } else if decrease <= 1e-15 * f.abs().max(1.0) {
            // Same roundoff safeguard as the cubic solver's ratio.
            let reg = 1e3 * f64::EPSILON * f.abs().max(1.0);
            (f - f_trial + reg) / (decrease + reg)
        } else {
            (f - f_trial) / decrease
        };
        let accepted = rho >= p.rho_accept;

        records.push(IterationRecord {
            k,
            f,
            grad_norm,
            sigma: delta,
            rho: Some(rho),
            step_norm,
            accepted,
            inner_iters: inner,
            hessvec_count: hess_total,
            grad_count,
            time_s: start.elapsed().as_secs_f64(),
            lambda_min_hess: None,
            f_trial: Some(f_trial),
            model_value: Some(f - decrease),
        });

        if rho < 0.25 {
            delta *= 0.25;
        } else if rho > 0.75 && hit_boundary {
            delta = (2.0 * delta).min(delta_max);
        }
        if accepted {
            x = m.retract(&x_trial, &Tangent::zero_like(&x_trial));
            f = f_trial;
            eg = prob.egrad(&x);
            grad_count += 1;
            g = m.egrad2rgrad(&x, &eg);
        }
    }

    let f0 = records.first().map(|r| r.f).unwrap_or(f);
    Ok((
        x,
        Trace {
            records,
            termination,
            f0,
            f_final: f,
            points: Some(points),
        },
    ))
}

/// Retraction-based gradient descent with Armijo backtracking (sufficient
/// decrease constant 1e-4, halving); the accepted step size seeds the next
/// iteration doubled. The `sigma` column of the trace is zero.
pub fn rgd_run(
    m: &dyn Manifold,
    prob: &Problem,
    x0: &Point,
    grad_tol: f64,
    max_iters: usize,
) -> Result<(Point, Trace)> {
    if !m.check_point(x0, 1e-8) {
        return Err(Error::InvalidArgument(format!(
            "x0 is not on {} within 1e-8",
            m.name()
        )));
    }
    let start = Instant::now();
    let c_armijo = 1e-4;
    let mut x = x0.clone();
    let mut f = prob.cost(&x);
    if !f.is_finite() {
        return Err(Error::InvalidArgument(
            "cost at the initial point is not finite".into(),
        ));
    }
    let mut grad_count = 0u64;
    let mut eg = prob.egrad(&x);
    grad_count += 1;
    let mut g = m.egrad2rgrad(&x, &eg);
    let mut t = 1.0;

    let mut records = Vec::new();
    let mut points = Vec::new();
    let mut termination = Termination::MaxIters;

    for k in 0..max_iters {
        points.push(x.clone());
        let grad_norm = m.norm(&x, &g);
        if grad_norm <= grad_tol {
            records.push(IterationRecord {
                k,
                f,
                grad_norm,
                sigma: 0.0,
                rho: None,
                step_norm: 0.0,
                accepted: false,
                inner_iters: 0,
                hessvec_count: 0,
                grad_count,
                time_s: start.elapsed().as_secs_f64(),
                lambda_min_hess: None,
                f_trial: None,
                model_value: None,
            });
            termination = if grad_norm == 0.0 && k == 0 {
                Termination::ZeroStep
            } else {
                Termination::GradTol
            };
            break;
        }

        let mut backtracks = 0usize;
        let mut accepted = false;
        let mut f_trial = f;
        let mut x_trial = x.clone();
        while backtracks < 60 {
            let step = Tangent(-t * &g.0);
            x_trial = m.retract(&x, &step);
            f_trial = prob.cost(&x_trial);
            if f_trial <= f - c_armijo * t * grad_norm * grad_norm {
                accepted = true;
                break;
            }
            t *= 0.5;
            backtracks += 1;
        }

        records.push(IterationRecord {
            k,
            f,
            grad_norm,
            sigma: 0.0,
            rho: None,
            step_norm: t * grad_norm,
            accepted,
            inner_iters: backtracks,
            hessvec_count: 0,
            grad_count,
            time_s: start.elapsed().as_secs_f64(),
            lambda_min_hess: None,
            f_trial: Some(f_trial),
            model_value: None,
        });

        if !accepted {
            termination = Termination::ZeroStep;
            break;
        }
        x = m.retract(&x_trial, &Tangent::zero_like(&x_trial));
        f = f_trial;
        eg = prob.egrad(&x);
        grad_count += 1;
        g = m.egrad2rgrad(&x, &eg);
        t = (t * 2.0).min(1e6);
    }

    let f0 = records.first().map(|r| r.f).unwrap_or(f);
    Ok((
        x,
        Trace {
            records,
            termination,
            f0,
            f_final: f,
            points: Some(points),
        },
    ))
}
