//! Lanczos tridiagonalization of the model Hessian and the subspace-growing
//! cubic subsolver built on it.
//!
//! The iteration keeps a fully re-orthogonalized basis. The gradient norm of
//! the model at the restricted minimizer is evaluated from coefficients in
//! the Lanczos basis (one step of lookahead supplies the coupling entry), so
//! no extra Hessian products are spent on the stopping test.

use nalgebra::DVector;

use super::secular::min_restricted_cubic;
use super::{check_second_order, StopReason, SubproblemResult};
use crate::manifolds::Tangent;
use crate::model::CubicModel;
use crate::{Error, Result};

/// State of the Lanczos process on a model Hessian.
///
/// Invariants: `basis` is orthonormal to ~1e-8 (full re-orthogonalization),
/// `alpha.len() == basis.len()`, `beta.len() == basis.len() - 1`, and
/// `T[i][j] = <q_i, H q_j>` is reproduced by `(alpha, beta)` on the
/// tridiagonal entries.
pub struct LanczosState {
    pub basis: Vec<Tangent>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gnorm: f64,
    /// Residual of the three-term recurrence for the most recent vector.
    pub(crate) residual: Tangent,
    /// `||H q_last||`, for the breakdown test.
    pub(crate) hq_norm: f64,
}

impl LanczosState {
    /// Start the process at `q_1 = g / ||g||`. Costs one Hessian product.
    pub fn new(model: &CubicModel<'_>) -> Result<Self> {
        let gnorm = model.grad_norm();
        if !(gnorm > 0.0) {
            return Err(Error::InvalidArgument(
                "Lanczos needs a nonzero gradient".into(),
            ));
        }
        let q1 = Tangent(&model.grad.0 / gnorm);
        let v = model.hess_vec(&q1);
        let a1 = model.inner(&q1, &v);
        let residual = Tangent(&v.0 - a1 * &q1.0);
        Ok(LanczosState {
            basis: vec![q1],
            alpha: vec![a1],
            beta: vec![],
            gnorm,
            residual,
            hq_norm: v.norm(),
        })
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    fn orthogonalize(&self, model: &CubicModel<'_>, v: &mut Tangent) {
        for _ in 0..2 {
            for q in &self.basis {
                let c = model.inner(v, q);
                v.0 -= c * &q.0;
            }
        }
    }

    /// Append `q_{k+1}`, `alpha_{k+1}` and `beta_k` via the three-term
    /// recurrence with full re-orthogonalization. On breakdown (residual norm
    /// below `1e-12 ||H q_k||`) the new vector is a random unit tangent
    /// orthogonal to the basis and `beta_k = 0`.
    ///
    /// Costs one Hessian product. Errors once the basis spans the tangent space.
    pub fn extend(&mut self, model: &CubicModel<'_>, rng: &mut dyn rand::RngCore) -> Result<()> {
        let dim = model.manifold().dim();
        if self.basis.len() >= dim {
            return Err(Error::Capacity(format!(
                "Lanczos basis already spans the {dim}-dimensional tangent space"
            )));
        }
        let mut w = self.residual.clone();
        self.orthogonalize(model, &mut w);
        let mut beta = w.norm();
        let q_next = if beta <= 1e-12 * self.hq_norm {
            beta = 0.0;
            loop {
                let mut r = model.manifold().rand_tangent(model.base(), rng);
                self.orthogonalize(model, &mut r);
                let n = r.norm();
                if n > 1e-6 {
                    break Tangent(r.0 / n);
                }
            }
        } else {
            Tangent(&w.0 / beta)
        };

        let v = model.hess_vec(&q_next);
        let a = model.inner(&q_next, &v);
        let q_prev = &self.basis[self.basis.len() - 1];
        let residual = Tangent(&v.0 - a * &q_next.0 - beta * &q_prev.0);

        self.hq_norm = v.norm();
        self.residual = residual;
        self.beta.push(beta);
        self.alpha.push(a);
        self.basis.push(q_next);
        Ok(())
    }

    /// `||grad m(s)||` for `s = sum_i y_i q_i`, from coefficients in the
    /// basis: the vector `gnorm e_1 + T[1..k+1, 1..k] y + sigma ||y|| (y; 0)`
    /// in R^{k+1}.
    ///
    /// Needs the lookahead entry `beta_k`, i.e. `y.len() <= basis.len() - 1`,
    /// unless `y` spans the full tangent space (then `beta_k = 0`).
    pub fn grad_norm_from_coeffs(
        &self,
        y: &DVector<f64>,
        sigma: f64,
        dim: usize,
    ) -> Result<f64> {
        let k = y.len();
        let full = k == dim;
        if !full && k > self.basis.len().saturating_sub(1) {
            return Err(Error::Precondition(
                "gradient-norm formula needs one lookahead Lanczos step".into(),
            ));
        }
        let ny = y.norm();
        let rows = if full { k } else { k + 1 };
        let mut r = DVector::zeros(rows);
        r[0] = self.gnorm;
        for i in 0..k {
            let mut t = self.alpha[i] * y[i];
            if i > 0 {
                t += self.beta[i - 1] * y[i - 1];
            }
            if i + 1 < k {
                t += self.beta[i] * y[i + 1];
            }
            r[i] += t + sigma * ny * y[i];
        }
        if !full {
            r[k] = self.beta[k - 1] * y[k - 1];
        }
        Ok(r.norm())
    }

    /// Materialize `s = sum_i y_i q_i`.
    pub fn assemble(&self, y: &DVector<f64>) -> Tangent {
        let mut s = Tangent(self.basis[0].0.scale(y[0]));
        for i in 1..y.len() {
            s.0 += y[i] * &self.basis[i].0;
        }
        s
    }

    /// Restricted model value at coefficients `y` (no Hessian products).
    pub fn restricted_value(&self, y: &DVector<f64>, f0: f64, sigma: f64) -> f64 {
        let k = y.len();
        let mut quad = 0.0;
        for i in 0..k {
            quad += self.alpha[i] * y[i] * y[i];
            if i + 1 < k {
                quad += 2.0 * self.beta[i] * y[i] * y[i + 1];
            }
        }
        f0 + self.gnorm * y[0] + 0.5 * quad + sigma / 3.0 * y.norm().powi(3)
    }
}

/// Lanczos-based cubic model subsolver.
///
/// Grows the Krylov subspace one vector at a time, globally minimizes the
/// restricted cubic after each growth step, and stops as soon as
/// `||grad m(s)|| <= theta ||s||^2`. At full dimension the restricted problem
/// is the whole problem and the solve necessarily succeeds.
///
/// With `second_order` set, a candidate step must additionally satisfy
/// `lambda_min(grad^2 m(s)) >= -theta ||s||`; failing that the iteration is
/// pushed on toward full dimension.
pub fn solve_lanczos(
    model: &CubicModel<'_>,
    theta: f64,
    max_inner: usize,
    second_order: bool,
    rng: &mut dyn rand::RngCore,
) -> Result<SubproblemResult> {
    let hv_before = model.hessvec_count();
    let dim = model.manifold().dim();
    if model.grad_norm() == 0.0 {
        return Ok(SubproblemResult {
            step: Tangent::zero_like(model.base()),
            model_value: model.f0,
            grad_norm: 0.0,
            inner_iters: 0,
            hessvec_count: 0,
            reason: StopReason::ZeroGradient,
        });
    }
    let budget = max_inner.max(1).min(dim);
    let mut state = LanczosState::new(model)?;
    let mut k = 1;
    loop {
        let sol = min_restricted_cubic(
            &state.alpha[..k],
            &state.beta[..k.saturating_sub(1)],
            state.gnorm,
            model.sigma,
            1e-10,
        )?;
        if k < dim {
            state.extend(model, rng)?;
        }
        let gn = state.grad_norm_from_coeffs(&sol.y, model.sigma, dim)?;
        let ns = sol.y.norm();

        // Materialize and evaluate the model gradient directly once the
        // coefficient-space test looks satisfied (or the subspace is
        // exhausted). The coefficient formula can be optimistic under severe
        // scale separation, so acceptance is decided on the direct value.
        let coeff_pass = gn <= theta * ns * ns;
        if coeff_pass || k == dim || k >= budget {
            let step = state.assemble(&sol.y);
            let hs = model.hess_vec(&step);
            let direct_gn = model.norm(&model.gradient_with_hs(&step, &hs));
            let direct_ns = model.norm(&step);
            // Same slack the coefficient/direct identity is specified to, so
            // boundary-exact terminations are not re-litigated forever.
            let direct_pass =
                direct_gn <= theta * direct_ns * direct_ns + 1e-8 * (1.0 + direct_gn);
            let finish = |reason: StopReason| -> SubproblemResult {
                SubproblemResult {
                    step: step.clone(),
                    model_value: model.value_with_hs(&step, &hs),
                    grad_norm: direct_gn,
                    inner_iters: k,
                    hessvec_count: model.hessvec_count() - hv_before,
                    reason,
                }
            };
            if k == dim {
                return Ok(finish(StopReason::FullDimension));
            }
            if coeff_pass {
                if !direct_pass {
                    // The coefficient certificate and the direct evaluation
                    // disagree beyond slack (inexact Hessian products or
                    // severe scaling): more Krylov vectors cannot close that
                    // gap, so hand the step back as an uncertified trial.
                    return Ok(finish(StopReason::MaxInner));
                }
                if second_order {
                    if check_second_order(model, &step, theta)? {
                        return Ok(finish(StopReason::FirstOrderMet));
                    }
                    // Not second-order safe yet: keep growing the subspace.
                } else {
                    return Ok(finish(StopReason::FirstOrderMet));
                }
            }
            if k >= budget {
                return Ok(finish(StopReason::MaxInner));
            }
        }
        k += 1;
    }
}
