//! An affine slice {y : A vec(y) = b} of R^{r x c}, treated as a flat manifold
//! with retraction x + s. Constraints are stored as an orthonormal basis of
//! the row space of A plus a particular solution.

use nalgebra::{DMatrix, DVector};

use super::{gaussian_matrix, Dretract, Manifold, Point, RetractionKind, Tangent};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct AffineSubspace {
    rows: usize,
    cols: usize,
    /// Orthonormal basis of the constraint (normal) space, ambient_len x k.
    normals: DMatrix<f64>,
    /// A particular point satisfying the constraints, as a flat vector.
    particular: DVector<f64>,
    constraints: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl AffineSubspace {
    /// Build the slice {y in R^{rows x cols} : constraints * vec(y) = rhs},
    /// with vec() in column-major order.
    pub fn new(
        rows: usize,
        cols: usize,
        constraints: DMatrix<f64>,
        rhs: DVector<f64>,
    ) -> Result<Self> {
        let ambient = rows * cols;
        if constraints.ncols() != ambient || constraints.nrows() != rhs.len() {
            return Err(Error::InvalidArgument(format!(
                "constraint system {}x{} does not match ambient length {ambient} / rhs {}",
                constraints.nrows(),
                constraints.ncols(),
                rhs.len()
            )));
        }
        // Orthonormalize the constraint rows (assumed independent).
        let at = constraints.transpose();
        let (q, _) = crate::linalg::thin_qr_pos(&at)
            .map_err(|_| Error::DegenerateInput("dependent affine constraints".into()))?;
        // Least-norm particular solution A^T (A A^T)^-1 b.
        let aat = &constraints * &at;
        let sol = aat
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::DegenerateInput("singular constraint Gram matrix".into()))?;
        let particular = &at * sol;
        Ok(AffineSubspace {
            rows,
            cols,
            normals: q,
            particular,
            constraints,
            rhs,
        })
    }

    fn flatten(&self, m: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_column_slice(m.as_slice())
    }

    fn unflatten(&self, v: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.rows, self.cols, v.as_slice())
    }

    /// The matrix-shaped particular solution (a valid point).
    pub fn origin(&self) -> Point {
        Point(self.unflatten(&self.particular))
    }

    fn project_flat(&self, v: &DVector<f64>) -> DVector<f64> {
        v - &self.normals * (self.normals.transpose() * v)
    }
}

impl Manifold for AffineSubspace {
    fn name(&self) -> String {
        format!(
            "Affine({}x{}, {} constraints)",
            self.rows,
            self.cols,
            self.constraints.nrows()
        )
    }

    fn dim(&self) -> usize {
        self.rows * self.cols - self.normals.ncols()
    }

    fn ambient_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn retraction_kind(&self) -> RetractionKind {
        RetractionKind::Exponential
    }

    fn project_tangent(&self, _x: &Point, z: &DMatrix<f64>) -> Tangent {
        let flat = self.project_flat(&self.flatten(z));
        Tangent(self.unflatten(&flat))
    }

    fn retract(&self, x: &Point, s: &Tangent) -> Point {
        Point(&x.0 + &s.0)
    }

    fn dretract(&self, _x: &Point, _s: &Tangent, z: &Tangent) -> Dretract {
        Dretract {
            vector: z.clone(),
            finite_difference: false,
        }
    }

    fn dretract_adjoint(&self, x: &Point, _s: &Tangent, amb: &DMatrix<f64>) -> Tangent {
        self.project_tangent(x, amb)
    }

    fn ehess2rhess(
        &self,
        x: &Point,
        _eg: &DMatrix<f64>,
        eh: &DMatrix<f64>,
        _s: &Tangent,
    ) -> Tangent {
        self.project_tangent(x, eh)
    }

    fn rand_point(&self, rng: &mut dyn rand::RngCore) -> Point {
        let z = gaussian_matrix(self.rows, self.cols, rng);
        let t = self.project_flat(&self.flatten(&z));
        Point(self.unflatten(&(&self.particular + t)))
    }

    fn check_point(&self, x: &Point, tol: f64) -> bool {
        if x.shape() != (self.rows, self.cols) || !x.is_finite() {
            return false;
        }
        let resid = &self.constraints * self.flatten(&x.0) - &self.rhs;
        resid.norm() <= tol * self.rhs.norm().max(1.0) * 10.0
    }

    fn check_tangent(&self, _x: &Point, v: &Tangent, tol: f64) -> bool {
        if v.shape() != (self.rows, self.cols) {
            return false;
        }
        let along = self.normals.transpose() * self.flatten(&v.0);
        along.norm() <= tol * v.norm().max(1.0)
    }
}
