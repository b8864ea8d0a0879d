//! The cubic-regularized second-order model on a tangent space:
//!
//! `m(s) = f0 + <s, g> + <s, H s>/2 + (sigma/3) ||s||^3`
//!
//! with `g` the gradient and `H` the (self-adjoint) Hessian operator of the
//! pullback at the origin. Hessian-vector products are counted by a monotone
//! atomic counter so subsolver cost accounting is exact.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;

use crate::linalg::{fdot, sym_eig};
use crate::manifolds::{tangent_basis, Manifold, Point, Tangent, DENSE_DIM_CAP};
use crate::{Error, Result};

type HessVecFn<'a> = Box<dyn Fn(&Tangent) -> Tangent + Sync + 'a>;

/// The model lives on the tangent space of `manifold` at `base`. It is
/// immutable except for the Hessian-vector counter; evaluation is pure and
/// thread-safe.
pub struct CubicModel<'a> {
    /// Cost at the base point, `m(0)`.
    pub f0: f64,
    /// Gradient of the pullback at the origin.
    pub grad: Tangent,
    /// Regularization weight, strictly positive.
    pub sigma: f64,
    manifold: &'a dyn Manifold,
    base: &'a Point,
    hessvec: HessVecFn<'a>,
    hv_count: AtomicU64,
}

impl<'a> CubicModel<'a> {
    pub fn new(
        manifold: &'a dyn Manifold,
        base: &'a Point,
        f0: f64,
        grad: Tangent,
        hessvec: impl Fn(&Tangent) -> Tangent + Sync + 'a,
        sigma: f64,
    ) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(CubicModel {
            f0,
            grad,
            sigma,
            manifold,
            base,
            hessvec: Box::new(hessvec),
            hv_count: AtomicU64::new(0),
        })
    }

    /// Model over a Euclidean space with an explicit dense symmetric Hessian.
    /// Used heavily in tests and the subsolver acceptance suite.
    pub fn dense(
        eu: &'a crate::manifolds::Euclidean,
        base: &'a Point,
        g: DMatrix<f64>,
        h: &'a DMatrix<f64>,
        sigma: f64,
    ) -> Result<Self> {
        CubicModel::new(
            eu,
            base,
            0.0,
            Tangent(g),
            move |s: &Tangent| Tangent(h * &s.0),
            sigma,
        )
    }

    pub fn manifold(&self) -> &dyn Manifold {
        self.manifold
    }

    pub fn base(&self) -> &Point {
        self.base
    }

    /// Apply the Hessian operator, bumping the product counter.
    pub fn hess_vec(&self, s: &Tangent) -> Tangent {
        self.hv_count.fetch_add(1, Ordering::Relaxed);
        (self.hessvec)(s)
    }

    /// Number of Hessian-vector products issued so far.
    pub fn hessvec_count(&self) -> u64 {
        self.hv_count.load(Ordering::Relaxed)
    }

    pub fn inner(&self, u: &Tangent, v: &Tangent) -> f64 {
        self.manifold.inner(self.base, u, v)
    }

    pub fn norm(&self, v: &Tangent) -> f64 {
        self.inner(v, v).sqrt()
    }

    pub fn grad_norm(&self) -> f64 {
        self.norm(&self.grad)
    }

    /// `m(s) = f0 + <s,g> + <s,Hs>/2 + (sigma/3)||s||^3`.
    pub fn value(&self, s: &Tangent) -> f64 {
        let hs = self.hess_vec(s);
        self.value_with_hs(s, &hs)
    }

    /// Model value when `H s` is already available (no extra product).
    pub fn value_with_hs(&self, s: &Tangent, hs: &Tangent) -> f64 {
        let ns = self.norm(s);
        self.f0
            + self.inner(s, &self.grad)
            + 0.5 * self.inner(s, hs)
            + self.sigma / 3.0 * ns.powi(3)
    }

    /// `grad m(s) = g + H s + sigma ||s|| s`.
    pub fn gradient(&self, s: &Tangent) -> Tangent {
        let hs = self.hess_vec(s);
        self.gradient_with_hs(s, &hs)
    }

    pub fn gradient_with_hs(&self, s: &Tangent, hs: &Tangent) -> Tangent {
        let ns = self.norm(s);
        Tangent(&self.grad.0 + &hs.0 + self.sigma * ns * &s.0)
    }

    /// Apply the model Hessian at `s`:
    /// `grad^2 m(s)[v] = H v + sigma (||s|| v + (<s,v>/||s||) s)`.
    pub fn hess_at(&self, s: &Tangent, v: &Tangent) -> Tangent {
        let hv = self.hess_vec(v);
        let ns = self.norm(s);
        if ns == 0.0 {
            return hv;
        }
        Tangent(&hv.0 + self.sigma * (ns * &v.0 + (self.inner(s, v) / ns) * &s.0))
    }

    /// Smallest eigenvalue of the self-adjoint operator `grad^2 m(s)` on the
    /// tangent space, by a dense eigensolve in an orthonormal tangent basis.
    ///
    /// `_tol` is kept for interface stability; the dense path is exact to
    /// machine precision. Errors when the tangent dimension exceeds the dense
    /// cap.
    pub fn hess_smallest_eig(&self, s: &Tangent, _tol: f64) -> Result<f64> {
        let basis = tangent_basis(self.manifold, self.base, DENSE_DIM_CAP)?;
        let d = basis.len();
        let mut mat = DMatrix::zeros(d, d);
        for (j, bj) in basis.iter().enumerate() {
            let hbj = self.hess_at(s, bj);
            for (i, bi) in basis.iter().enumerate() {
                mat[(i, j)] = fdot(&bi.0, &hbj.0);
            }
        }
        let (vals, _) = sym_eig(&mat);
        Ok(vals[0])
    }
}

/// Outcome of the regularized improvement ratio.
#[derive(Debug, Clone, Copy)]
pub struct RhoResult {
    /// The ratio itself; `-inf` when degenerate (step gets rejected).
    pub rho: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub degenerate: bool,
}

/// Regularized ratio of actual improvement over model improvement:
///
/// `rho = (f(x) - f(trial)) / (m(0) - m(s) + (sigma/3)||s||^3)`.
///
/// The denominator equals `-(<s,g> + <s,Hs>/2)` by cancellation of the cubic
/// terms; it is nonnegative whenever the subsolver made progress. Ratios with
/// denominator below `1e-15 * max(1, |f_x|)` are flagged degenerate and
/// reported as `-inf` so the step is rejected, as is a NaN trial cost.
pub fn rho(f_x: f64, f_trial: f64, model: &CubicModel<'_>, s: &Tangent) -> RhoResult {
    let ns = model.norm(s);
    let m_s = model.value(s);
    let denominator = model.f0 - m_s + model.sigma / 3.0 * ns.powi(3);
    let numerator = f_x - f_trial;
    let eps_den = 1e-15 * f_x.abs().max(1.0);
    if !f_trial.is_finite() || denominator <= eps_den {
        return RhoResult {
            rho: f64::NEG_INFINITY,
            numerator,
            denominator,
            degenerate: true,
        };
    }
    RhoResult {
        rho: numerator / denominator,
        numerator,
        denominator,
        degenerate: false,
    }
}
