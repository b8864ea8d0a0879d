//! Nonnegative-Polak-Ribiere nonlinear conjugate gradients on the cubic
//! model, with exact one-dimensional minimization along each direction.
//!
//! The starting point is a Cauchy-like step: the exact minimizer of the
//! one-dimensional cubic along the negative gradient. The model gradient is
//! maintained incrementally (`H s` updates linearly), so each iteration costs
//! a single Hessian product.

use super::{StopReason, SubproblemResult};
use crate::manifolds::Tangent;
use crate::model::CubicModel;
use crate::Result;

/// Exact minimizer over t >= 0 of the 1-D cubic
/// `-t gnorm + (t^2/2) h + (sigma/3) t^3`, where `h = <g, Hg>/||g||^2`.
fn cauchy_radius(gnorm: f64, h: f64, sigma: f64) -> f64 {
    // Positive root of sigma t^2 + h t - gnorm = 0, in the form that avoids
    // cancellation on the branch where the curvature term dominates.
    let disc = (h * h + 4.0 * sigma * gnorm).sqrt();
    if h > 0.0 {
        2.0 * gnorm / (h + disc)
    } else {
        (-h + disc) / (2.0 * sigma)
    }
}

struct LineGeometry {
    /// <g + Hs, d>: derivative of the quadratic part at t = 0.
    a0: f64,
    /// <d, H d>.
    b: f64,
    /// ||s||^2, <s, d>, ||d||^2.
    alpha: f64,
    beta: f64,
    gamma: f64,
    sigma: f64,
}

impl LineGeometry {
    fn dphi(&self, t: f64) -> f64 {
        let r2 = self.alpha + 2.0 * self.beta * t + self.gamma * t * t;
        self.a0 + t * self.b + self.sigma * r2.max(0.0).sqrt() * (self.beta + t * self.gamma)
    }

    /// Value difference phi(t) - phi(0) (cubic-regularized quadratic restriction).
    fn dvalue(&self, t: f64) -> f64 {
        let r2 = self.alpha + 2.0 * self.beta * t + self.gamma * t * t;
        let r0 = self.alpha.max(0.0).sqrt();
        self.a0 * t + 0.5 * self.b * t * t
            + self.sigma / 3.0 * (r2.max(0.0).powf(1.5) - r0.powi(3))
    }
}

/// Root of `dphi` on (0, inf) by doubling bracket then safeguarded
/// Newton/bisection. `dphi(0) < 0` is required; `dphi -> +inf` as t grows.
fn line_search(geom: &LineGeometry) -> f64 {
    let mut hi = 1.0;
    let mut tries = 0;
    while geom.dphi(hi) <= 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return hi; // unreachable for sigma > 0, gamma > 0
        }
    }
    let mut lo = 0.0;
    let mut t = 0.5 * hi;
    for _ in 0..100 {
        let d = geom.dphi(t);
        if d.abs() <= 1e-14 * (1.0 + geom.a0.abs()) {
            break;
        }
        if d > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        // Newton on dphi with numerical second derivative, safeguarded.
        let eps = 1e-7 * (1.0 + t);
        let dd = (geom.dphi(t + eps) - geom.dphi(t - eps)) / (2.0 * eps);
        let newton = if dd > 0.0 { t - d / dd } else { f64::NAN };
        t = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    // Keep the step a strict descent step; the root can sit on a plateau in
    // pathological geometry, so backtrack until the value does not increase.
    let mut t_final = t;
    let mut halvings = 0;
    while geom.dvalue(t_final) > 0.0 && halvings < 60 {
        t_final *= 0.5;
        halvings += 1;
    }
    t_final
}

/// Nonlinear CG on the cubic model, same termination test as the Lanczos
/// subsolver. The gradient is never evaluated with extra Hessian products;
/// `H s` is carried along the iteration.
pub fn solve_nlcg(model: &CubicModel<'_>, theta: f64, max_inner: usize) -> Result<SubproblemResult> {
    let hv_before = model.hessvec_count();
    let gnorm = model.grad_norm();
    if gnorm == 0.0 {
        return Ok(SubproblemResult {
            step: Tangent::zero_like(model.base()),
            model_value: model.f0,
            grad_norm: 0.0,
            inner_iters: 0,
            hessvec_count: 0,
            reason: StopReason::ZeroGradient,
        });
    }

    // Cauchy-like initialization along -g.
    let hg = model.hess_vec(&model.grad);
    let h = model.inner(&model.grad, &hg) / (gnorm * gnorm);
    let t0 = cauchy_radius(gnorm, h, model.sigma);
    let mut s = Tangent(-t0 / gnorm * &model.grad.0);
    let mut hs = Tangent(-t0 / gnorm * &hg.0);
    let mut gm = model.gradient_with_hs(&s, &hs);
    let mut gm_prev: Option<Tangent> = None;
    let mut dir_prev: Option<Tangent> = None;

    let budget = max_inner.max(1);
    let mut iters = 1usize; // the Cauchy step counts as the first iteration
    loop {
        let gn = model.norm(&gm);
        let ns = model.norm(&s);
        let done = gn <= theta * ns * ns;
        if done || iters >= budget {
            // The carried H s accumulates drift over many updates; re-apply
            // the Hessian once and report the fresh values. A fresh check
            // that contradicts the carried one marks the step uncertified.
            let hs_fresh = model.hess_vec(&s);
            let gm_fresh = model.gradient_with_hs(&s, &hs_fresh);
            let gn_fresh = model.norm(&gm_fresh);
            let done_fresh = gn_fresh <= theta * ns * ns + 1e-8 * (1.0 + gn_fresh);
            return Ok(SubproblemResult {
                step: s.clone(),
                model_value: model.value_with_hs(&s, &hs_fresh),
                grad_norm: gn_fresh,
                inner_iters: iters,
                hessvec_count: model.hessvec_count() - hv_before,
                reason: if done_fresh {
                    StopReason::FirstOrderMet
                } else {
                    StopReason::MaxInner
                },
            });
        }
        iters += 1;

        // Nonnegative Polak-Ribiere direction, restarted whenever it fails
        // to be a descent direction.
        let d = match (&gm_prev, &dir_prev) {
            (Some(gp), Some(dp)) => {
                let gp_sq = model.inner(gp, gp);
                let beta = if gp_sq > 0.0 {
                    ((model.inner(&gm, &gm) - model.inner(&gm, gp)) / gp_sq).max(0.0)
                } else {
                    0.0
                };
                let cand = Tangent(-&gm.0 + beta * &dp.0);
                if model.inner(&cand, &gm) < 0.0 {
                    cand
                } else {
                    Tangent(-&gm.0)
                }
            }
            _ => Tangent(-&gm.0),
        };

        let hd = model.hess_vec(&d);
        let geom = LineGeometry {
            a0: model.inner(&model.grad, &d) + model.inner(&hs, &d),
            b: model.inner(&d, &hd),
            alpha: ns * ns,
            beta: model.inner(&s, &d),
            gamma: model.inner(&d, &d),
            sigma: model.sigma,
        };
        let t = line_search(&geom);

        gm_prev = Some(gm);
        dir_prev = Some(d.clone());
        s = Tangent(&s.0 + t * &d.0);
        hs = Tangent(&hs.0 + t * &hd.0);
        gm = model.gradient_with_hs(&s, &hs);
    }
}
