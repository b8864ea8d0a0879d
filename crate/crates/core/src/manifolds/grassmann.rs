//! The Grassmann manifold Gr(n,p) of p-dimensional subspaces of R^n,
//! represented by orthonormal n x p matrices with horizontal tangent vectors
//! (X^T S = 0) and the Q-factor retraction. No quotient bookkeeping beyond
//! the horizontal projection.

use nalgebra::DMatrix;

use super::stiefel::{qf_dretract, qf_dretract_adjoint};
use super::{gaussian_matrix, Dretract, Manifold, Point, Tangent};
use crate::linalg::thin_qr_pos;

#[derive(Debug, Clone)]
pub struct Grassmann {
    n: usize,
    p: usize,
}

impl Grassmann {
    pub fn new(n: usize, p: usize) -> Self {
        assert!(p >= 1 && n > p, "Grassmann requires n > p >= 1");
        Grassmann { n, p }
    }
}

impl Manifold for Grassmann {
    fn name(&self) -> String {
        format!("Grassmann({},{})", self.n, self.p)
    }

    fn dim(&self) -> usize {
        self.p * (self.n - self.p)
    }

    fn ambient_shape(&self) -> (usize, usize) {
        (self.n, self.p)
    }

    fn project_tangent(&self, x: &Point, z: &DMatrix<f64>) -> Tangent {
        Tangent(z - &x.0 * (x.0.transpose() * z))
    }

    fn retract(&self, x: &Point, s: &Tangent) -> Point {
        let (q, _) = thin_qr_pos(&(&x.0 + &s.0)).expect("X + S has full column rank for tangent S");
        Point(q)
    }

    fn dretract(&self, x: &Point, s: &Tangent, z: &Tangent) -> Dretract {
        // Differential of the representative map, projected to the horizontal
        // space at the new representative.
        let w = qf_dretract(&x.0, &s.0, &z.0);
        let y = self.retract(x, s);
        Dretract {
            vector: self.project_tangent(&y, &w),
            finite_difference: false,
        }
    }

    fn dretract_adjoint(&self, x: &Point, s: &Tangent, amb: &DMatrix<f64>) -> Tangent {
        let y = self.retract(x, s);
        let horizontal = self.project_tangent(&y, amb);
        let w = qf_dretract_adjoint(&x.0, &s.0, &horizontal.0);
        self.project_tangent(x, &w)
    }

    fn ehess2rhess(
        &self,
        x: &Point,
        eg: &DMatrix<f64>,
        eh: &DMatrix<f64>,
        s: &Tangent,
    ) -> Tangent {
        let corrected = eh - &s.0 * (x.0.transpose() * eg);
        self.project_tangent(x, &corrected)
    }

    fn rand_point(&self, rng: &mut dyn rand::RngCore) -> Point {
        loop {
            let g = gaussian_matrix(self.n, self.p, rng);
            if let Ok((q, _)) = thin_qr_pos(&g) {
                return Point(q);
            }
        }
    }

    fn check_point(&self, x: &Point, tol: f64) -> bool {
        if x.shape() != (self.n, self.p) || !x.is_finite() {
            return false;
        }
        let gram = x.0.transpose() * &x.0;
        (gram - DMatrix::identity(self.p, self.p)).norm() <= tol * (self.p as f64).sqrt().max(1.0)
    }

    fn check_tangent(&self, x: &Point, v: &Tangent, tol: f64) -> bool {
        if v.shape() != (self.n, self.p) {
            return false;
        }
        (x.0.transpose() * &v.0).norm() <= tol * v.norm().max(1.0)
    }
}
