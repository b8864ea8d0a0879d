//! Matrix manifolds: the interface plus the concrete geometries used by the
//! benchmark problems.
//!
//! Points and tangent vectors are dense real matrices in ambient coordinates,
//! interpreted by a [`Manifold`]. All manifolds here are Riemannian
//! submanifolds of their ambient space (or quotients represented by horizontal
//! lifts), so the metric is the Euclidean/Frobenius inner product throughout.

mod affine;
mod euclidean;
mod grassmann;
mod oblique;
mod product;
mod rotations;
mod sphere;
mod stiefel;

pub use affine::AffineSubspace;
pub use euclidean::Euclidean;
pub use grassmann::Grassmann;
pub use oblique::Oblique;
pub use product::ProductManifold;
pub use rotations::Rotations;
pub use sphere::Sphere;
pub use stiefel::Stiefel;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{linalg, Error, Result};

/// A point on a manifold, stored in ambient coordinates.
///
/// Vectors are `(n, 1)` matrices. Whether a given matrix actually lies on a
/// manifold is checked by [`Manifold::check_point`].
#[derive(Debug, Clone, PartialEq)]
pub struct Point(pub DMatrix<f64>);

/// A tangent vector in ambient coordinates, with the same shape as its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent(pub DMatrix<f64>);

impl Point {
    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Tangent {
    pub fn zero_like(x: &Point) -> Self {
        let (r, c) = x.shape();
        Tangent(DMatrix::zeros(r, c))
    }
    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Which retraction a manifold is currently using.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetractionKind {
    /// The manifold's default retraction (metric projection, Q-factor, ...).
    Canonical,
    /// The exponential map, where implemented (sphere, rotations).
    Exponential,
}

/// Result of a differentiated retraction.
///
/// `finite_difference` flags results from the central-difference fallback so
/// verification code can loosen tolerances accordingly.
#[derive(Debug, Clone)]
pub struct Dretract {
    pub vector: Tangent,
    pub finite_difference: bool,
}

/// A Riemannian manifold in ambient coordinates.
///
/// Implementations are immutable after construction; every method is a pure
/// function of its arguments and safe to call concurrently. RNG state is
/// caller-owned.
pub trait Manifold: Send + Sync {
    fn name(&self) -> String;

    /// Intrinsic dimension.
    fn dim(&self) -> usize;

    /// Shape of points and tangent vectors in ambient coordinates.
    fn ambient_shape(&self) -> (usize, usize);

    fn retraction_kind(&self) -> RetractionKind {
        RetractionKind::Canonical
    }

    /// Riemannian metric. All manifolds in this crate use the ambient
    /// Frobenius inner product.
    fn inner(&self, _x: &Point, u: &Tangent, v: &Tangent) -> f64 {
        linalg::fdot(&u.0, &v.0)
    }

    fn norm(&self, x: &Point, v: &Tangent) -> f64 {
        self.inner(x, v, v).sqrt()
    }

    /// Orthogonal projection of an ambient matrix onto the tangent space at `x`.
    fn project_tangent(&self, x: &Point, z: &DMatrix<f64>) -> Tangent;

    /// Move away from `x` along `s` while staying on the manifold.
    fn retract(&self, x: &Point, s: &Tangent) -> Point;

    /// Differential of the retraction: `D retract(x, .)(s)[z]`, a tangent
    /// vector at `retract(x, s)`.
    ///
    /// The default implementation uses central finite differences with
    /// tangent projection and flags itself as such.
    fn dretract(&self, x: &Point, s: &Tangent, z: &Tangent) -> Dretract {
        let h = 1e-6 * s.norm().max(1.0);
        let plus = self.retract(x, &Tangent(&s.0 + h * &z.0));
        let minus = self.retract(x, &Tangent(&s.0 - h * &z.0));
        let diff = (plus.0 - minus.0) / (2.0 * h);
        let y = self.retract(x, s);
        Dretract {
            vector: self.project_tangent(&y, &diff),
            finite_difference: true,
        }
    }

    /// Adjoint of the differentiated retraction, pulled back to the tangent
    /// space at `x`: the tangent `w` with `<w, z> = <amb, dretract(x,s)[z]>`
    /// for all tangents `z` at `x`.
    ///
    /// The default expands over an orthonormal tangent basis; concrete
    /// manifolds override this with closed forms.
    fn dretract_adjoint(&self, x: &Point, s: &Tangent, amb: &DMatrix<f64>) -> Tangent {
        let basis = tangent_basis(self, x, self.dim()).expect("tangent basis construction failed");
        let (r, c) = self.ambient_shape();
        let mut w = DMatrix::zeros(r, c);
        for e in &basis {
            let de = self.dretract(x, s, e);
            w += linalg::fdot(amb, &de.vector.0) * &e.0;
        }
        Tangent(w)
    }

    /// Convert a Euclidean (ambient) gradient into the Riemannian gradient.
    fn egrad2rgrad(&self, x: &Point, eg: &DMatrix<f64>) -> Tangent {
        self.project_tangent(x, eg)
    }

    /// Convert Euclidean gradient plus Euclidean Hessian-vector product into
    /// the Riemannian Hessian applied to `s` (curvature correction included).
    fn ehess2rhess(
        &self,
        x: &Point,
        eg: &DMatrix<f64>,
        eh: &DMatrix<f64>,
        s: &Tangent,
    ) -> Tangent;

    /// A uniform-ish random point on the manifold.
    fn rand_point(&self, rng: &mut dyn rand::RngCore) -> Point;

    /// A unit-norm random tangent vector at `x`.
    fn rand_tangent(&self, x: &Point, rng: &mut dyn rand::RngCore) -> Tangent {
        let (r, c) = self.ambient_shape();
        loop {
            let z = gaussian_matrix(r, c, rng);
            let t = self.project_tangent(x, &z);
            let n = t.norm();
            if n > 1e-8 {
                return Tangent(t.0 / n);
            }
        }
    }

    /// Whether `x` lies on the manifold within `tol`.
    fn check_point(&self, x: &Point, tol: f64) -> bool;

    /// Whether `v` is tangent at `x` within `tol`.
    fn check_tangent(&self, x: &Point, v: &Tangent, tol: f64) -> bool;

    /// Distance-like scale used to seed default solver parameters.
    fn typical_distance(&self) -> f64 {
        (self.dim() as f64).sqrt() / 8.0
    }
}

/// Matrix with independent standard-normal entries.
pub fn gaussian_matrix(r: usize, c: usize, rng: &mut dyn rand::RngCore) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Default check-point/check-tangent tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Cap on the tangent dimension for dense basis construction.
pub const DENSE_DIM_CAP: usize = 400;

/// Orthonormal basis of the tangent space at `x`, built by projecting ambient
/// coordinate directions and re-orthogonalizing (twice, for stability).
///
/// Errors when the requested dimension exceeds [`DENSE_DIM_CAP`].
pub fn tangent_basis(m: &(impl Manifold + ?Sized), x: &Point, cap: usize) -> Result<Vec<Tangent>> {
    let d = m.dim();
    if d > cap.min(DENSE_DIM_CAP) {
        return Err(Error::Capacity(format!(
            "tangent dimension {d} exceeds dense cap {}",
            cap.min(DENSE_DIM_CAP)
        )));
    }
    let (r, c) = m.ambient_shape();
    let mut basis: Vec<Tangent> = Vec::with_capacity(d);
    'outer: for j in 0..c {
        for i in 0..r {
            let mut e = DMatrix::zeros(r, c);
            e[(i, j)] = 1.0;
            let mut v = m.project_tangent(x, &e).0;
            for _ in 0..2 {
                for b in &basis {
                    let coef = linalg::fdot(&v, &b.0);
                    v -= coef * &b.0;
                }
            }
            let n = v.norm();
            if n > 1e-8 {
                basis.push(Tangent(v / n));
            }
            if basis.len() == d {
                break 'outer;
            }
        }
    }
    if basis.len() != d {
        return Err(Error::DegenerateInput(format!(
            "could only build {} of {d} tangent basis vectors",
            basis.len()
        )));
    }
    Ok(basis)
}

/// Matrix of the differentiated retraction in orthonormal tangent bases at
/// `x` and at `retract(x, s)`; its singular values are those of `DR_x(s)`.
pub fn dretract_matrix(
    m: &(impl Manifold + ?Sized),
    x: &Point,
    s: &Tangent,
) -> Result<DMatrix<f64>> {
    let y = m.retract(x, s);
    let bx = tangent_basis(m, x, DENSE_DIM_CAP)?;
    let by = tangent_basis(m, &y, DENSE_DIM_CAP)?;
    let d = bx.len();
    let mut mat = DMatrix::zeros(d, d);
    for (j, e) in bx.iter().enumerate() {
        let w = m.dretract(x, s, e).vector;
        for (i, f) in by.iter().enumerate() {
            mat[(i, j)] = linalg::fdot(&f.0, &w.0);
        }
    }
    Ok(mat)
}

#[cfg(test)]
mod tests;
