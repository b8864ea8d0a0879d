//! Adaptive regularization with cubics: the outer loop.
//!
//! Each iteration builds the cubic model from the Riemannian gradient and
//! Hessian at the current iterate, asks a subsolver for a trial step meeting
//! the first-order progress conditions, scores it with the regularized ratio
//! and adapts the regularization weight:
//!
//! - very successful (`rho >= eta2`): `sigma <- max(sigma_min, gamma1 sigma)`
//! - successful (`eta1 <= rho < eta2`): `sigma` unchanged
//! - unsuccessful (`rho < eta1`): `sigma <- gamma2 sigma`
//!
//! Gradient and Hessian evaluations are cached per iterate, so rejected steps
//! rebuild the model without new oracle calls and the trace counters reflect
//! real work.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::manifolds::{Manifold, Point, Tangent};
use crate::model::{rho, CubicModel};
use crate::problems::Problem;
use crate::subsolver::{solve_lanczos, solve_nlcg, StopReason};
use crate::trace::{IterationRecord, Termination, Trace};
use crate::{Error, Result};

/// Which cubic subsolver the outer loop calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsolver {
    Lanczos,
    Nlcg,
}

/// Solver configuration. `sigma_0` defaults to `100 / delta_0` with
/// `delta_0 = sqrt(dim)/8` (the manifold's typical distance);
/// `second_order_tol` defaults to `sqrt(grad_tol)`.
#[derive(Debug, Clone)]
pub struct ArcParams {
    pub theta: f64,
    pub sigma_min: f64,
    /// Initial regularization; `None` picks the manifold-scaled default.
    pub sigma_0: Option<f64>,
    pub eta1: f64,
    pub eta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub second_order: bool,
    /// Eigenvalue tolerance for second-order termination; `None` picks
    /// `sqrt(grad_tol)`.
    pub second_order_tol: Option<f64>,
    pub subsolver: Subsolver,
    pub seed: u64,
}

impl Default for ArcParams {
    fn default() -> Self {
        ArcParams {
            theta: 0.25,
            sigma_min: 1e-10,
            sigma_0: None,
            eta1: 0.1,
            eta2: 0.9,
            gamma1: 0.1,
            gamma2: 2.0,
            gamma3: 2.0,
            grad_tol: 1e-9,
            max_iters: 1000,
            second_order: false,
            second_order_tol: None,
            subsolver: Subsolver::Lanczos,
            seed: 0,
        }
    }
}

impl ArcParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.theta > 0.0) {
            return bad(format!("theta must be > 0, got {}", self.theta));
        }
        if !(self.sigma_min > 0.0) {
            return bad(format!("sigma_min must be > 0, got {}", self.sigma_min));
        }
        if let Some(s0) = self.sigma_0 {
            if !(s0 >= self.sigma_min) {
                return bad(format!("sigma_0 = {s0} must be >= sigma_min"));
            }
        }
        if !(0.0 < self.eta1 && self.eta1 <= self.eta2 && self.eta2 < 1.0) {
            return bad(format!(
                "need 0 < eta1 <= eta2 < 1, got eta1 = {}, eta2 = {}",
                self.eta1, self.eta2
            ));
        }
        if !(0.0 < self.gamma1 && self.gamma1 < 1.0) {
            return bad(format!("gamma1 must be in (0,1), got {}", self.gamma1));
        }
        if !(self.gamma2 > 1.0) {
            return bad(format!("gamma2 must be > 1, got {}", self.gamma2));
        }
        if !(self.gamma3 >= self.gamma2) {
            return bad(format!(
                "gamma3 = {} must be >= gamma2 = {}",
                self.gamma3, self.gamma2
            ));
        }
        if !(self.grad_tol >= 0.0) {
            return bad(format!("grad_tol must be >= 0, got {}", self.grad_tol));
        }
        Ok(())
    }

    pub fn initial_sigma(&self, m: &dyn Manifold) -> f64 {
        self.sigma_0
            .unwrap_or(100.0 / m.typical_distance())
            .max(self.sigma_min)
    }

    pub fn eps_hessian(&self) -> f64 {
        self.second_order_tol.unwrap_or_else(|| self.grad_tol.sqrt())
    }
}

/// Regularization update, applied after every evaluated trial step.
pub fn update_sigma(sigma: f64, rho: f64, p: &ArcParams) -> f64 {
    if rho >= p.eta2 {
        p.sigma_min.max(p.gamma1 * sigma)
    } else if rho >= p.eta1 {
        sigma
    } else {
        p.gamma2 * sigma
    }
}

/// Bound on the regularization weight implied by a scalar-Taylor constant L:
/// `max(sigma_0, L gamma3 / (2 (1 - eta2)))`.
pub fn sigma_max_bound(sigma_0: f64, l_est: f64, p: &ArcParams) -> f64 {
    sigma_0.max(l_est * p.gamma3 / (2.0 * (1.0 - p.eta2)))
}

/// Diagnostic bound on the number of successful iterations that can still see
/// a gradient above `p.grad_tol`.
pub fn k1_bound(f0: f64, f_low: f64, p: &ArcParams, l_prime: f64, sigma_max: f64) -> f64 {
    let eps = p.grad_tol;
    3.0 * (f0 - f_low) / (p.eta1 * p.sigma_min)
        * ((l_prime / 2.0 + p.theta + sigma_max) / eps).powf(1.5)
}

/// Diagnostic bound on the number of successful iterations whose pullback
/// Hessian has an eigenvalue below `-eps_h`.
pub fn k2_bound(f0: f64, f_low: f64, p: &ArcParams, sigma_max: f64, eps_h: f64) -> f64 {
    3.0 * (f0 - f_low) / (p.eta1 * p.sigma_min) * ((p.theta + 2.0 * sigma_max) / eps_h).powi(3)
}

/// Run the solver from `x0`. Returns the last accepted point and the trace.
pub fn arc_run(
    m: &dyn Manifold,
    prob: &Problem,
    x0: &Point,
    p: &ArcParams,
) -> Result<(Point, Trace)> {
    p.validate()?;
    if !m.check_point(x0, 1e-8) {
        return Err(Error::InvalidArgument(format!(
            "x0 is not on {} within 1e-8",
            m.name()
        )));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let dim = m.dim();
    let max_inner = dim.min(500);
    let eps_h = p.eps_hessian();

    let mut x = x0.clone();
    let mut f = prob.cost(&x);
    if !f.is_finite() {
        return Err(Error::InvalidArgument(
            "cost at the initial point is not finite".into(),
        ));
    }
    let mut grad_count: u64 = 0;
    let mut hessvec_total: u64 = 0;
    let mut eg = prob.egrad(&x);
    grad_count += 1;
    let mut g = m.egrad2rgrad(&x, &eg);
    let mut sigma = p.initial_sigma(m);

    let mut records: Vec<IterationRecord> = Vec::new();
    let mut points: Vec<Point> = Vec::new();
    let mut termination = Termination::MaxIters;

    enum Outcome {
        Terminal(Termination, Option<f64>),
        Step {
            step: Tangent,
            inner_iters: usize,
            model_value: f64,
            rho: crate::model::RhoResult,
            f_trial: f64,
            x_trial: Point,
            lambda_min: Option<f64>,
        },
    }

    for k in 0..p.max_iters {
        points.push(x.clone());
        let grad_norm = m.norm(&x, &g);

        let outcome = {
            let model = CubicModel::new(
                m,
                &x,
                f,
                g.clone(),
                |s: &Tangent| m.ehess2rhess(&x, &eg, &prob.ehessvec(&x, s), s),
                sigma,
            )?;

            let mut enforce_second_order = false;
            let mut lambda_min = None;
            let mut terminal = None;
            if grad_norm <= p.grad_tol {
                if p.second_order {
                    // Candidate termination: certify or escape.
                    let lam = model.hess_smallest_eig(&Tangent::zero_like(&x), 1e-10)?;
                    lambda_min = Some(lam);
                    if lam >= -eps_h {
                        terminal = Some(Termination::SecondOrderMet);
                    } else {
                        enforce_second_order = true;
                    }
                } else {
                    terminal = Some(Termination::GradTol);
                }
            }

            match terminal {
                Some(t) => {
                    // Harvest products spent on the certification eigensolve.
                    hessvec_total += model.hessvec_count();
                    Outcome::Terminal(t, lambda_min)
                }
                None => {
                    // The Lanczos subsolver is the one that can push toward
                    // full dimension for second-order progress; use it for
                    // escape iterations regardless of the configured solver.
                    let sub = if enforce_second_order {
                        solve_lanczos(&model, p.theta, max_inner, true, &mut rng)?
                    } else {
                        match p.subsolver {
                            Subsolver::Lanczos => {
                                solve_lanczos(&model, p.theta, max_inner, false, &mut rng)?
                            }
                            Subsolver::Nlcg => solve_nlcg(&model, p.theta, max_inner)?,
                        }
                    };
                    if sub.reason == StopReason::ZeroGradient || sub.step.norm() == 0.0 {
                        hessvec_total += model.hessvec_count();
                        Outcome::Terminal(Termination::ZeroStep, lambda_min)
                    } else {
                        let x_trial = m.retract(&x, &sub.step);
                        let f_trial = prob.cost(&x_trial);
                        let mut rr = rho(f, f_trial, &model, &sub.step);
                        // Roundoff safeguard: when the model decrease sits at
                        // the resolution of f itself, the raw ratio is noise.
                        // Shift numerator and denominator by a tiny margin so
                        // the ratio tends to 1 in that regime instead of
                        // rejecting forever and inflating sigma.
                        if rr.degenerate && f_trial.is_finite() && rr.denominator > 0.0 {
                            let reg = 1e3 * f64::EPSILON * f.abs().max(1.0);
                            let shifted = (rr.numerator + reg) / (rr.denominator + reg);
                            if shifted >= p.eta1 {
                                rr.rho = shifted;
                                rr.degenerate = false;
                            }
                        }
                        hessvec_total += model.hessvec_count();
                        Outcome::Step {
                            inner_iters: sub.inner_iters,
                            model_value: sub.model_value,
                            step: sub.step,
                            rho: rr,
                            f_trial,
                            x_trial,
                            lambda_min,
                        }
                    }
                }
            }
        };

        match outcome {
            Outcome::Terminal(t, lambda_min) => {
                records.push(IterationRecord {
                    k,
                    f,
                    grad_norm,
                    sigma,
                    rho: None,
                    step_norm: 0.0,
                    accepted: false,
                    inner_iters: 0,
                    hessvec_count: hessvec_total,
                    grad_count,
                    time_s: start.elapsed().as_secs_f64(),
                    lambda_min_hess: lambda_min,
                    f_trial: None,
                    model_value: None,
                });
                termination = t;
                break;
            }
            Outcome::Step {
                step,
                inner_iters,
                model_value,
                rho: rr,
                f_trial,
                x_trial,
                lambda_min,
            } => {
                let accepted = !rr.degenerate && rr.rho >= p.eta1;
                records.push(IterationRecord {
                    k,
                    f,
                    grad_norm,
                    sigma,
                    rho: Some(rr.rho),
                    step_norm: m.norm(&x, &step),
                    accepted,
                    inner_iters,
                    hessvec_count: hessvec_total,
                    grad_count,
                    time_s: start.elapsed().as_secs_f64(),
                    lambda_min_hess: lambda_min,
                    f_trial: Some(f_trial),
                    model_value: Some(model_value),
                });
                sigma = update_sigma(sigma, rr.rho, p);
                if accepted {
                    // Re-retracting with a zero step re-projects the iterate,
                    // absorbing floating-point drift.
                    x = m.retract(&x_trial, &Tangent::zero_like(&x_trial));
                    f = f_trial;
                    eg = prob.egrad(&x);
                    grad_count += 1;
                    g = m.egrad2rgrad(&x, &eg);
                }
            }
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
