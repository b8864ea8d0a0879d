//! Runtime diagnostics: empirical regularity constants, differentiated-
//! retraction bounds, and per-trace inequality checks. Failures come back as
//! report rows, not panics, so negative controls can exercise them.

use nalgebra::DMatrix;

use crate::arc::{sigma_max_bound, ArcParams};
use crate::linalg::{fdot, loglog_slope, sigma_min};
use crate::manifolds::{dretract_matrix, Manifold, Point, RetractionKind, Tangent};
use crate::model::CubicModel;
use crate::problems::Problem;
use crate::trace::Trace;
use crate::{Error, Result};

/// Gradient of the pullback `f o R_x` at `s`, via the adjoint of the
/// differentiated retraction. A tangent vector at `x`.
pub fn pullback_grad(m: &dyn Manifold, prob: &Problem, x: &Point, s: &Tangent) -> Tangent {
    let y = m.retract(x, s);
    let eg = prob.egrad(&y);
    let rg = m.egrad2rgrad(&y, &eg);
    m.dretract_adjoint(x, s, &rg.0)
}

/// Pullback Hessian applied to the ray direction, `d/dt grad fhat(t s) |_0`,
/// by Richardson-extrapolated central differences of the pullback gradient.
/// This captures the retraction's own curvature (the term that distinguishes
/// the pullback Hessian from the Riemannian Hessian on non-second-order
/// retractions); the extrapolation kills the h^2 term so exact quadratic
/// pullbacks come out below the noise floor.
pub fn pullback_hess_along(m: &dyn Manifold, prob: &Problem, x: &Point, s: &Tangent) -> Tangent {
    let h = 1e-3;
    let diff = |step: f64| -> DMatrix<f64> {
        let gp = pullback_grad(m, prob, x, &Tangent(step * &s.0));
        let gm = pullback_grad(m, prob, x, &Tangent(-step * &s.0));
        (gp.0 - gm.0) / (2.0 * step)
    };
    let d1 = diff(h);
    let d2 = diff(2.0 * h);
    Tangent((4.0 * d1 - d2) / 3.0)
}

/// Outcome of a Taylor-remainder study. `slope == None` means every residual
/// sat below the noise floor (exact quadratic pullback).
#[derive(Debug, Clone, Copy)]
pub struct TaylorCheck {
    pub slope: Option<f64>,
    pub constant_est: f64,
}

impl TaylorCheck {
    /// Whether the measured slope lies in `[lo, hi]`; exact pullbacks pass.
    pub fn slope_in(&self, lo: f64, hi: f64) -> bool {
        match self.slope {
            None => true,
            Some(s) => (lo..=hi).contains(&s),
        }
    }
}

/// Scalar Taylor check: the remainder `fhat(ts) - [fhat(0) + t <g,s> +
/// (t^2/2) <s, Hess_pullback s>]` should decay like t^3. The constant
/// estimate is `6 max_t |r(t)| / (t ||s||)^3`.
pub fn check_taylor_a2(
    m: &dyn Manifold,
    prob: &Problem,
    x: &Point,
    s: &Tangent,
    t_grid: &[f64],
) -> TaylorCheck {
    let f0 = prob.cost(x);
    let eg = prob.egrad(x);
    let g = m.egrad2rgrad(x, &eg);
    let lin = m.inner(x, &g, s);
    let quad = fdot(&s.0, &pullback_hess_along(m, prob, x, s).0);
    let ns = m.norm(x, s);

    let mut max_ratio: f64 = 0.0;
    let mut residuals = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let ft = prob.cost(&m.retract(x, &Tangent(t * &s.0)));
        let r = (ft - (f0 + t * lin + 0.5 * t * t * quad)).abs();
        residuals.push(r);
        max_ratio = max_ratio.max(6.0 * r / (t * ns).powi(3));
    }
    let floor = 1e-14 * (1.0 + f0.abs());
    let slope = if residuals.iter().all(|&r| r < floor) {
        None
    } else {
        loglog_slope(t_grid, &residuals, floor)
    };
    TaylorCheck {
        slope,
        constant_est: max_ratio,
    }
}

/// Vector Taylor check: `|| grad fhat(ts) - grad fhat(0) - t Hess_pullback s ||`
/// should decay like t^2. The constant is `2 max_t ||res|| / (t ||s||)^2`.
pub fn check_grad_taylor_a4(
    m: &dyn Manifold,
    prob: &Problem,
    x: &Point,
    s: &Tangent,
    t_grid: &[f64],
) -> TaylorCheck {
    let eg = prob.egrad(x);
    let g = m.egrad2rgrad(x, &eg);
    let hv = pullback_hess_along(m, prob, x, s);
    let ns = m.norm(x, s);
    let gn = m.norm(x, &g);

    let mut max_ratio: f64 = 0.0;
    let mut residuals = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let gt = pullback_grad(m, prob, x, &Tangent(t * &s.0));
        let r = (&gt.0 - &g.0 - t * &hv.0).norm();
        residuals.push(r);
        max_ratio = max_ratio.max(2.0 * r / (t * ns).powi(2));
    }
    let floor = 1e-13 * (1.0 + gn);
    let slope = if residuals.iter().all(|&r| r < floor) {
        None
    } else {
        loglog_slope(t_grid, &residuals, floor)
    };
    TaylorCheck {
        slope,
        constant_est: max_ratio,
    }
}

/// One row of the differentiated-retraction study.
#[derive(Debug, Clone, PartialEq)]
pub struct DrCheckRow {
    pub manifold: String,
    pub step_norm: f64,
    pub sigma_min: f64,
    /// The applicable lower bound (`-inf` when none is known for this
    /// manifold and step size; the row is then informational).
    pub bound: f64,
    pub pass: bool,
}

/// Estimate `sigma_min(DR_x(s))` at the requested step norms and compare to
/// the applicable closed-form bound: equality `1/(1+a^2)` on the projective
/// sphere, `1 - 3a - a^2/2` for Q-factor retractions (Stiefel, rotations),
/// `sin(a)/a` for the exponential sphere. Step norm 0 checks the identity.
pub fn check_dr_bounds(
    m: &dyn Manifold,
    step_norms: &[f64],
    samples: usize,
    rng: &mut dyn rand::RngCore,
) -> Result<Vec<DrCheckRow>> {
    let name = m.name();
    let is_sphere = name.starts_with("Sphere(");
    let is_exp = m.retraction_kind() == RetractionKind::Exponential;
    let qf_bound = (name.starts_with("Stiefel(") || name.starts_with("SO(")) && !is_exp;

    let mut rows = Vec::new();
    for _ in 0..samples {
        let x = m.rand_point(rng);
        for &a in step_norms {
            let s = if a == 0.0 {
                Tangent::zero_like(&x)
            } else {
                Tangent(a * m.rand_tangent(&x, rng).0)
            };
            let fd = m.dretract(&x, &s, &m.rand_tangent(&x, rng)).finite_difference;
            let mat = dretract_matrix(m, &x, &s)?;
            let smin = sigma_min(&mat);
            let (bound, pass) = if a == 0.0 {
                let tol = if fd { 1e-5 } else { 1e-10 };
                (1.0, (smin - 1.0).abs() <= tol)
            } else if is_sphere && !is_exp {
                let expected = 1.0 / (1.0 + a * a);
                (expected, (smin - expected).abs() <= 1e-8)
            } else if is_sphere && is_exp {
                if a < std::f64::consts::PI {
                    let b = a.sin() / a;
                    (b, smin >= b - 1e-9)
                } else {
                    (f64::NEG_INFINITY, true)
                }
            } else if qf_bound {
                let b = 1.0 - 3.0 * a - 0.5 * a * a;
                if b > 0.0 {
                    (b, smin >= b - 1e-10)
                } else {
                    (f64::NEG_INFINITY, true)
                }
            } else {
                (f64::NEG_INFINITY, true)
            };
            rows.push(DrCheckRow {
                manifold: name.clone(),
                step_norm: a,
                sigma_min: smin,
                bound,
                pass,
            });
        }
    }
    Ok(rows)
}

/// Per-trace inequality report.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceCheck {
    /// Sum of cubed accepted step norms vs `3 (f0 - f_low) / (eta1 sigma_min)`.
    pub sumcubes_lhs: f64,
    pub sumcubes_rhs: f64,
    pub sumcubes_pass: bool,
    /// `sigma_k >= sigma_min` on every record.
    pub sigma_floor_pass: bool,
    /// Scalar-Taylor constant observed on the actual trial steps.
    pub l_trace: f64,
    /// `max(sigma_0, L gamma3 / (2 (1 - eta2)))` with 10% slack.
    pub sigma_max_est: f64,
    pub sigma_cap_pass: bool,
    /// Iteration counting: total <= (1 + |ln g1|/ln g2) K + ln(smax/s0)/ln g2.
    pub counting_lhs: f64,
    pub counting_rhs: f64,
    pub counting_pass: bool,
    /// Accepted steps decrease the cost by at least (eta1 sigma_min / 3)||s||^3.
    pub descent_violations: usize,
}

impl TraceCheck {
    pub fn all_pass(&self) -> bool {
        self.sumcubes_pass
            && self.sigma_floor_pass
            && self.sigma_cap_pass
            && self.counting_pass
            && self.descent_violations == 0
    }
}

/// Evaluate the trace inequalities. `l_external` folds in a Taylor-study
/// estimate of the scalar regularity constant, when available; the check also
/// derives the operative constant from the logged trial steps itself.
pub fn check_trace(trace: &Trace, p: &ArcParams, l_external: Option<f64>) -> TraceCheck {
    let f_low = trace
        .records
        .iter()
        .map(|r| r.f)
        .chain(trace.records.iter().filter_map(|r| r.f_trial))
        .fold(f64::INFINITY, f64::min)
        .min(trace.f_final);

    let sumcubes_lhs: f64 = trace
        .records
        .iter()
        .filter(|r| r.accepted)
        .map(|r| r.step_norm.powi(3))
        .sum();
    let sumcubes_rhs = 3.0 * (trace.f0 - f_low) / (p.eta1 * p.sigma_min);
    let sumcubes_pass = sumcubes_lhs <= sumcubes_rhs * (1.0 + 1e-12) + 1e-12;

    let sigma_floor_pass = trace.records.iter().all(|r| r.sigma >= p.sigma_min);

    // Operative scalar-Taylor constant on the logged steps: the model value
    // already carries the quadratic part, so the pullback overshoot is
    // f_trial - (m(s) - (sigma/3)||s||^3).
    let mut l_trace: f64 = 0.0;
    for r in &trace.records {
        if let (Some(ft), Some(mv)) = (r.f_trial, r.model_value) {
            if r.step_norm > 1e-12 {
                let quad_model = mv - r.sigma / 3.0 * r.step_norm.powi(3);
                let overshoot = ft - quad_model;
                if overshoot > 0.0 {
                    l_trace = l_trace.max(6.0 * overshoot / r.step_norm.powi(3));
                }
            }
        }
    }
    let l_used = l_trace.max(l_external.unwrap_or(0.0));

    let sigma0 = trace.records.first().map(|r| r.sigma).unwrap_or(p.sigma_min);
    let sigma_max_est = sigma_max_bound(sigma0, l_used, p) * 1.1;
    let sigma_observed = trace
        .records
        .iter()
        .map(|r| r.sigma)
        .fold(f64::NEG_INFINITY, f64::max);
    let sigma_cap_pass = sigma_observed <= sigma_max_est;

    // Counting runs over iterations that evaluated a trial step.
    let evaluated: Vec<_> = trace.records.iter().filter(|r| r.rho.is_some()).collect();
    let counting_lhs = evaluated.len() as f64;
    let successes = evaluated.iter().filter(|r| r.accepted).count() as f64;
    let counting_rhs = (1.0 + (p.gamma1.ln().abs() / p.gamma2.ln())) * successes
        + (sigma_max_est / sigma0).ln().max(0.0) / p.gamma2.ln();
    let counting_pass = counting_lhs <= counting_rhs + 1e-9;

    let mut descent_violations = 0usize;
    for r in &trace.records {
        if r.accepted {
            if let Some(ft) = r.f_trial {
                let needed = p.eta1 * p.sigma_min / 3.0 * r.step_norm.powi(3);
                if r.f - ft < needed - 1e-12 * r.f.abs().max(1.0) {
                    descent_violations += 1;
                }
            }
        }
    }

    TraceCheck {
        sumcubes_lhs,
        sumcubes_rhs,
        sumcubes_pass,
        sigma_floor_pass,
        l_trace,
        sigma_max_est,
        sigma_cap_pass,
        counting_lhs,
        counting_rhs,
        counting_pass,
        descent_violations,
    }
}

/// Step-norm bound check (needs the trace's logged points to rebuild each
/// model): counts records whose step exceeds
/// `sqrt(3 ||g|| / sigma_min) + (3 / (2 sigma_min)) max(0, -lambda_min)`.
pub fn check_step_bound(
    trace: &Trace,
    prob: &Problem,
    m: &dyn Manifold,
    p: &ArcParams,
) -> Result<usize> {
    let points = trace.points.as_ref().ok_or_else(|| {
        Error::Precondition("trace does not carry base points (loaded from CSV?)".into())
    })?;
    let mut violations = 0usize;
    for (r, x) in trace.records.iter().zip(points.iter()) {
        if r.step_norm == 0.0 {
            continue;
        }
        let eg = prob.egrad(x);
        let g = m.egrad2rgrad(x, &eg);
        let model = CubicModel::new(
            m,
            x,
            r.f,
            g,
            |s: &Tangent| m.ehess2rhess(x, &eg, &prob.ehessvec(x, s), s),
            r.sigma.max(p.sigma_min),
        )?;
        let lam = model.hess_smallest_eig(&Tangent::zero_like(x), 1e-10)?;
        let bound = (3.0 * r.grad_norm / p.sigma_min).sqrt()
            + 1.5 / p.sigma_min * (-lam).max(0.0);
        if r.step_norm > bound * (1.0 + 1e-10) {
            violations += 1;
        }
    }
    Ok(violations)
}

/// Aggregate diagnostics for one benchmark instance. All fields are
/// reproducible from (seed, trace).
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    /// Empirical scalar-Taylor constant (max over sample points).
    pub l_est: f64,
    /// Empirical vector-Taylor constant, with the curvature term folded in.
    pub l_prime_est: f64,
    pub sigma_max_observed: f64,
    pub sumcubes_lhs: f64,
    pub sumcubes_rhs: f64,
    pub step_bound_violations: Option<usize>,
    pub dr_checks: Vec<DrCheckRow>,
    /// (a2_slope, a4_slope) per sample point; `None` slope = exact pullback.
    pub taylor_slopes: Vec<(Option<f64>, Option<f64>)>,
    /// Step-norm bound / least-singular-value pair assumed by the analysis,
    /// when a closed-form bound applies on this manifold.
    pub a_b_pair: Option<(f64, f64)>,
}

impl DiagnosticsReport {
    /// Serialize to `section,name,value,extra,pass` CSV rows. Floats use 17
    /// significant digits so [`DiagnosticsReport::from_csv`] reloads the
    /// report losslessly; commas inside manifold names become semicolons.
    pub fn to_csv(&self) -> String {
        fn row(out: &mut String, sec: &str, name: &str, v: f64, e: f64, pass: bool) {
            out.push_str(&format!("{sec},{name},{v:.16e},{e:.16e},{}\n", u8::from(pass)));
        }
        let mut out = String::from("section,name,value,extra,pass\n");
        row(&mut out, "constants", "l_est", self.l_est, 0.0, true);
        row(&mut out, "constants", "l_prime_est", self.l_prime_est, 0.0, true);
        row(
            &mut out,
            "constants",
            "sigma_max_observed",
            self.sigma_max_observed,
            0.0,
            true,
        );
        row(
            &mut out,
            "sumcubes",
            "lhs_vs_rhs",
            self.sumcubes_lhs,
            self.sumcubes_rhs,
            self.sumcubes_lhs <= self.sumcubes_rhs,
        );
        if let Some(v) = self.step_bound_violations {
            row(&mut out, "stepbound", "violations", v as f64, 0.0, v == 0);
        }
        for r in &self.dr_checks {
            out.push_str(&format!(
                "dretract,{}@{:.16e},{:.16e},{:.16e},{}\n",
                r.manifold.replace(',', ";"),
                r.step_norm,
                r.sigma_min,
                r.bound,
                u8::from(r.pass)
            ));
        }
        for (i, (a2, a4)) in self.taylor_slopes.iter().enumerate() {
            let f = |o: &Option<f64>| o.map(|v| format!("{v:.16e}")).unwrap_or("exact".into());
            out.push_str(&format!("taylor,point{i},{},{},1\n", f(a2), f(a4)));
        }
        if let Some((a, b)) = self.a_b_pair {
            row(&mut out, "assumption_ab", "a_b", a, b, true);
        }
        out
    }

    /// Reload a report serialized by [`DiagnosticsReport::to_csv`].
    pub fn from_csv(text: &str) -> Result<DiagnosticsReport> {
        let mut report = DiagnosticsReport {
            l_est: f64::NAN,
            l_prime_est: f64::NAN,
            sigma_max_observed: f64::NAN,
            sumcubes_lhs: f64::NAN,
            sumcubes_rhs: f64::NAN,
            step_bound_violations: None,
            dr_checks: Vec::new(),
            taylor_slopes: Vec::new(),
            a_b_pair: None,
        };
        let parse = |s: &str, line: usize| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::Parse {
                line,
                msg: format!("bad float {s:?}: {e}"),
            })
        };
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected 5 columns, got {}", cols.len()),
                });
            }
            match (cols[0], cols[1]) {
                ("constants", "l_est") => report.l_est = parse(cols[2], i + 1)?,
                ("constants", "l_prime_est") => report.l_prime_est = parse(cols[2], i + 1)?,
                ("constants", "sigma_max_observed") => {
                    report.sigma_max_observed = parse(cols[2], i + 1)?
                }
                ("sumcubes", _) => {
                    report.sumcubes_lhs = parse(cols[2], i + 1)?;
                    report.sumcubes_rhs = parse(cols[3], i + 1)?;
                }
                ("stepbound", _) => {
                    report.step_bound_violations = Some(parse(cols[2], i + 1)? as usize)
                }
                ("dretract", tag) => {
                    let (name, step) = tag.rsplit_once('@').ok_or(Error::Parse {
                        line: i + 1,
                        msg: "dretract row lacks @step tag".into(),
                    })?;
                    report.dr_checks.push(DrCheckRow {
                        manifold: name.replace(';', ","),
                        step_norm: parse(step, i + 1)?,
                        sigma_min: parse(cols[2], i + 1)?,
                        bound: parse(cols[3], i + 1)?,
                        pass: cols[4] == "1",
                    });
                }
                ("taylor", _) => {
                    let slot = |s: &str| -> Result<Option<f64>> {
                        if s == "exact" {
                            Ok(None)
                        } else {
                            parse(s, i + 1).map(Some)
                        }
                    };
                    report.taylor_slopes.push((slot(cols[2])?, slot(cols[3])?));
                }
                ("assumption_ab", _) => {
                    report.a_b_pair = Some((parse(cols[2], i + 1)?, parse(cols[3], i + 1)?))
                }
                (sec, name) => {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: format!("unknown report row {sec}/{name}"),
                    })
                }
            }
        }
        Ok(report)
    }
}

/// Closed-form step-bound/least-singular-value pair for manifolds where one
/// is known, at a reference step norm of 0.25.
pub fn closed_form_ab(m: &dyn Manifold) -> Option<(f64, f64)> {
    let a = 0.25;
    let name = m.name();
    let exp = m.retraction_kind() == RetractionKind::Exponential;
    if name.starts_with("Sphere(") {
        return Some(if exp {
            (a, a.sin() / a)
        } else {
            (a, 1.0 / (1.0 + a * a))
        });
    }
    if (name.starts_with("Stiefel(") || name.starts_with("SO(")) && !exp {
        return Some((a, 1.0 - 3.0 * a - 0.5 * a * a));
    }
    if name.starts_with("Euclidean(") || name.starts_with("Affine(") {
        return Some((f64::INFINITY, 1.0));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{gaussian_matrix, Euclidean, Sphere, Stiefel};
    use crate::trace::{IterationRecord, Termination};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t_grid() -> Vec<f64> {
        (0..9).map(|i| 1e-3 * 10f64.powf(i as f64 / 4.0)).collect()
    }

    fn rayleigh(n: usize, rng: &mut ChaCha8Rng) -> (DMatrix<f64>, Problem) {
        let g = gaussian_matrix(n, n, rng);
        let a = 0.5 * (&g + g.transpose());
        let a1 = a.clone();
        let a2 = a.clone();
        let a3 = a.clone();
        let p = Problem::new(
            "rayleigh",
            move |x: &Point| -0.5 * fdot(&x.0, &(&a1 * &x.0)),
            move |x: &Point| -(&a2 * &x.0),
            move |_: &Point, s: &Tangent| -(&a3 * &s.0),
            None,
        );
        (a, p)
    }

    #[test]
    fn euclidean_quadratic_is_exact() {
        let n = 4;
        let d = DMatrix::identity(n, n);
        let d2 = d.clone();
        let d3 = d.clone();
        let prob = Problem::new(
            "quad",
            move |x: &Point| 0.5 * fdot(&x.0, &(&d * &x.0)),
            move |x: &Point| &d2 * &x.0,
            move |_: &Point, s: &Tangent| &d3 * &s.0,
            None,
        );
        let m = Euclidean::vector(n);
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let x = m.rand_point(&mut rng);
        let s = m.rand_tangent(&x, &mut rng);
        let a2 = check_taylor_a2(&m, &prob, &x, &s, &t_grid());
        assert!(a2.slope.is_none(), "quadratic pullback must be exact");
        let a4 = check_grad_taylor_a4(&m, &prob, &x, &s, &t_grid());
        assert!(a4.slope.is_none());
    }

    #[test]
    fn sphere_rayleigh_slopes_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(92);
        let (_, prob) = rayleigh(12, &mut rng);
        let m = Sphere::new(12);
        for _ in 0..3 {
            let x = m.rand_point(&mut rng);
            let s = m.rand_tangent(&x, &mut rng);
            let a2 = check_taylor_a2(&m, &prob, &x, &s, &t_grid());
            assert!(a2.slope_in(2.7, 3.3), "A2 slope {:?}", a2.slope);
            let a4 = check_grad_taylor_a4(&m, &prob, &x, &s, &t_grid());
            assert!(a4.slope_in(1.7, 2.3), "A4 slope {:?}", a4.slope);
        }
    }

    #[test]
    fn cubic_cost_recovers_its_third_derivative() {
        // f = sum x_i^3 on R^n: the third derivative along e1 is 6, and the
        // scalar-Taylor constant estimate lands on it.
        let n = 3;
        let prob = Problem::new(
            "cubic",
            |x: &Point| x.0.iter().map(|v| v.powi(3)).sum::<f64>(),
            |x: &Point| DMatrix::from_fn(x.0.nrows(), 1, |i, _| 3.0 * x.0[(i, 0)].powi(2)),
            |x: &Point, s: &Tangent| {
                DMatrix::from_fn(x.0.nrows(), 1, |i, _| 6.0 * x.0[(i, 0)] * s.0[(i, 0)])
            },
            None,
        );
        let m = Euclidean::vector(n);
        let x = Point(DMatrix::from_column_slice(n, 1, &[0.3, -0.2, 0.5]));
        let mut e1 = DMatrix::zeros(n, 1);
        e1[(0, 0)] = 1.0;
        let s = Tangent(e1);
        let chk = check_taylor_a2(&m, &prob, &x, &s, &t_grid());
        assert_relative_eq!(chk.constant_est, 6.0, epsilon = 1e-3);
        assert!(chk.slope_in(2.9, 3.1), "slope {:?}", chk.slope);
    }

    #[test]
    fn pullback_grad_matches_finite_differences_of_cost() {
        // Dual-path oracle: adjoint-of-dretract vs central differences of the
        // pullback value.
        let mut rng = ChaCha8Rng::seed_from_u64(93);
        let (_, prob) = rayleigh(8, &mut rng);
        let m = Sphere::new(8);
        let x = m.rand_point(&mut rng);
        let s = Tangent(0.4 * m.rand_tangent(&x, &mut rng).0);
        let g = pullback_grad(&m, &prob, &x, &s);
        for _ in 0..4 {
            let z = m.rand_tangent(&x, &mut rng);
            let h = 1e-6;
            let fp = prob.cost(&m.retract(&x, &Tangent(&s.0 + h * &z.0)));
            let fm = prob.cost(&m.retract(&x, &Tangent(&s.0 - h * &z.0)));
            let fd = (fp - fm) / (2.0 * h);
            let an = fdot(&g.0, &z.0);
            assert!(
                (fd - an).abs() <= 1e-6 * (1.0 + an.abs()),
                "fd {fd} vs adjoint {an}"
            );
        }
    }

    #[test]
    fn dr_bound_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(94);
        let sp = Sphere::new(6);
        let rows = check_dr_bounds(&sp, &[0.0, 2.0], 3, &mut rng).unwrap();
        assert!(rows.iter().all(|r| r.pass), "{rows:?}");
        // ||s|| = 2 on the projective sphere: sigma_min = 1/5 exactly.
        for r in rows.iter().filter(|r| r.step_norm == 2.0) {
            assert_relative_eq!(r.sigma_min, 0.2, epsilon = 1e-8);
        }

        let st = Stiefel::new(6, 2);
        let rows = check_dr_bounds(&st, &[0.0, 0.2], 3, &mut rng).unwrap();
        assert!(rows.iter().all(|r| r.pass), "{rows:?}");
        for r in rows.iter().filter(|r| r.step_norm == 0.2) {
            assert!(r.sigma_min >= 0.38 - 1e-10, "sigma_min {}", r.sigma_min);
            assert_relative_eq!(r.bound, 0.38, epsilon = 1e-12);
        }
    }

    fn synthetic_record(
        k: usize,
        f: f64,
        f_trial: f64,
        sigma: f64,
        step: f64,
        accepted: bool,
    ) -> IterationRecord {
        IterationRecord {
            k,
            f,
            grad_norm: 1.0,
            sigma,
            rho: Some(if accepted { 0.5 } else { 0.01 }),
            step_norm: step,
            accepted,
            inner_iters: 1,
            hessvec_count: k as u64,
            grad_count: k as u64,
            time_s: 0.0,
            lambda_min_hess: None,
            f_trial: Some(f_trial),
            model_value: Some(f - 0.1),
        }
    }

    #[test]
    fn trace_checks_pass_on_well_formed_trace() {
        let p = ArcParams::default();
        let records = vec![
            synthetic_record(0, 1.0, 0.6, 1.0, 0.5, true),
            synthetic_record(1, 0.6, 0.58, 1.0, 0.6, false),
            synthetic_record(2, 0.6, 0.3, 2.0, 0.4, true),
        ];
        let trace = Trace {
            records,
            termination: Termination::GradTol,
            f0: 1.0,
            f_final: 0.3,
            points: None,
        };
        let chk = check_trace(&trace, &p, None);
        assert!(chk.sumcubes_pass);
        assert!(chk.sigma_floor_pass);
        assert_eq!(chk.descent_violations, 0);
        assert!(chk.counting_pass, "{chk:?}");
    }

    #[test]
    fn negative_controls_flag_violations() {
        let p = ArcParams::default();
        // Descent violation: accepted step that increases the cost.
        let bad_descent = Trace {
            records: vec![synthetic_record(0, 1.0, 1.5, 1.0, 0.5, true)],
            termination: Termination::MaxIters,
            f0: 1.0,
            f_final: 1.5,
            points: None,
        };
        let chk = check_trace(&bad_descent, &p, None);
        assert!(chk.descent_violations > 0);

        // Sigma floor violation.
        let bad_floor = Trace {
            records: vec![synthetic_record(0, 1.0, 0.9, 1e-12, 0.1, true)],
            termination: Termination::MaxIters,
            f0: 1.0,
            f_final: 0.9,
            points: None,
        };
        assert!(!check_trace(&bad_floor, &p, None).sigma_floor_pass);

        // Sum-of-cubes violation: giant accepted step, tiny decrease.
        let mut r = synthetic_record(0, 1.0, 1.0 - 1e-9, 1.0, 1e6, true);
        r.model_value = Some(1.0 - 1e-9);
        let bad_cubes = Trace {
            records: vec![r],
            termination: Termination::MaxIters,
            f0: 1.0,
            f_final: 1.0 - 1e-9,
            points: None,
        };
        assert!(!check_trace(&bad_cubes, &p, None).sumcubes_pass);

        // Counting violation: many unsuccessful steps but sigma never moved.
        let records: Vec<IterationRecord> = (0..50)
            .map(|k| synthetic_record(k, 1.0, 0.999, 1.0, 0.1, false))
            .collect();
        let bad_count = Trace {
            records,
            termination: Termination::MaxIters,
            f0: 1.0,
            f_final: 1.0,
            points: None,
        };
        let chk = check_trace(&bad_count, &p, Some(0.0));
        assert!(!chk.counting_pass, "{chk:?}");
    }

    #[test]
    fn sum_of_cubes_vacuous_without_successes() {
        let p = ArcParams::default();
        let trace = Trace {
            records: vec![synthetic_record(0, 1.0, 0.999, 1.0, 0.3, false)],
            termination: Termination::MaxIters,
            f0: 1.0,
            f_final: 1.0,
            points: None,
        };
        let chk = check_trace(&trace, &p, None);
        assert_eq!(chk.sumcubes_lhs, 0.0);
        assert!(chk.sumcubes_pass);
    }

    #[test]
    fn step_bound_on_real_run_and_missing_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(95);
        let (_, prob) = rayleigh(10, &mut rng);
        let m = Sphere::new(10);
        let x0 = m.rand_point(&mut rng);
        let p = ArcParams {
            sigma_min: 1e-4, // tighter floor so the bound is meaningful
            ..ArcParams::default()
        };
        let (_, trace) = crate::arc::arc_run(&m, &prob, &x0, &p).unwrap();
        let violations = check_step_bound(&trace, &prob, &m, &p).unwrap();
        assert_eq!(violations, 0);

        let mut no_points = trace.clone();
        no_points.points = None;
        assert!(matches!(
            check_step_bound(&no_points, &prob, &m, &p),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn step_bound_formula_example() {
        // g = 0, H = diag(-1, 1), sigma_min = 1: any subsolver step obeys
        // ||s|| <= sqrt(0) + (3/2) max(0, 1) = 3/2. The global cubic
        // minimizer along the negative mode has norm |lambda_min|/sigma = 1.
        let bound = (3.0 * 0.0f64 / 1.0).sqrt() + 1.5 * 1.0;
        assert_relative_eq!(bound, 1.5);
    }

    #[test]
    fn report_serializes_and_reloads_losslessly() {
        let report = DiagnosticsReport {
            l_est: 1.25 + 1e-13,
            l_prime_est: 0.5,
            sigma_max_observed: 2.0,
            sumcubes_lhs: 0.3,
            sumcubes_rhs: 10.0,
            step_bound_violations: Some(0),
            dr_checks: vec![DrCheckRow {
                manifold: "Stiefel(6,2)".into(),
                step_norm: 0.2,
                sigma_min: 0.4123456789012345,
                bound: 0.38,
                pass: true,
            }],
            taylor_slopes: vec![(Some(3.01), Some(1.99)), (None, None)],
            a_b_pair: Some((0.3, 0.055)),
        };
        let csv = report.to_csv();
        assert!(csv.contains("exact"));
        let back = DiagnosticsReport::from_csv(&csv).unwrap();
        assert_eq!(report, back);
        // And a second round trip is byte-identical.
        assert_eq!(csv, back.to_csv());
    }

    #[test]
    fn sphere_dretract_operator_norm_at_most_one() {
        // On the projective sphere the differentiated retraction is a
        // contraction, so its largest singular value never exceeds 1.
        let sp = Sphere::new(9);
        let mut rng = ChaCha8Rng::seed_from_u64(96);
        for _ in 0..10 {
            let x = sp.rand_point(&mut rng);
            let a = 3.0 * rand::Rng::gen::<f64>(&mut rng);
            let s = Tangent(a * sp.rand_tangent(&x, &mut rng).0);
            let mat = crate::manifolds::dretract_matrix(&sp, &x, &s).unwrap();
            let smax = crate::linalg::singular_values(&mat)[0];
            assert!(smax <= 1.0 + 1e-10, "operator norm {smax} above 1");
        }
    }

    #[test]
    fn closed_form_ab_pairs() {
        assert_eq!(closed_form_ab(&Euclidean::vector(3)), Some((f64::INFINITY, 1.0)));
        let (a, b) = closed_form_ab(&Sphere::new(4)).unwrap();
        approx::assert_relative_eq!(b, 1.0 / (1.0 + a * a));
        let (a, b) = closed_form_ab(&Stiefel::new(5, 2)).unwrap();
        approx::assert_relative_eq!(b, 1.0 - 3.0 * a - a * a / 2.0);
        assert!(closed_form_ab(&crate::manifolds::Grassmann::new(5, 2)).is_none());
    }
}
