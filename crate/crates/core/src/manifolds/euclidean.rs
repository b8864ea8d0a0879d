//! Euclidean space R^{n x m}, the trivial manifold.

use nalgebra::DMatrix;

use super::{gaussian_matrix, Dretract, Manifold, Point, RetractionKind, Tangent};

#[derive(Debug, Clone)]
pub struct Euclidean {
    rows: usize,
    cols: usize,
}

impl Euclidean {
    pub fn new(rows: usize, cols: usize) -> Self {
        assert!(rows * cols > 0, "Euclidean space must have positive dimension");
        Euclidean { rows, cols }
    }

    /// Column-vector space R^n.
    pub fn vector(n: usize) -> Self {
        Euclidean::new(n, 1)
    }
}

impl Manifold for Euclidean {
    fn name(&self) -> String {
        format!("Euclidean({}x{})", self.rows, self.cols)
    }

    fn dim(&self) -> usize {
        self.rows * self.cols
    }

    fn ambient_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn retraction_kind(&self) -> RetractionKind {
        // x + s is the exponential map of the flat metric.
        RetractionKind::Exponential
    }

    fn project_tangent(&self, _x: &Point, z: &DMatrix<f64>) -> Tangent {
        Tangent(z.clone())
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

    fn dretract_adjoint(&self, _x: &Point, _s: &Tangent, amb: &DMatrix<f64>) -> Tangent {
        Tangent(amb.clone())
    }

    fn ehess2rhess(
        &self,
        _x: &Point,
        _eg: &DMatrix<f64>,
        eh: &DMatrix<f64>,
        _s: &Tangent,
    ) -> Tangent {
        Tangent(eh.clone())
    }

    fn rand_point(&self, rng: &mut dyn rand::RngCore) -> Point {
        Point(gaussian_matrix(self.rows, self.cols, rng))
    }

    fn check_point(&self, x: &Point, _tol: f64) -> bool {
        x.shape() == (self.rows, self.cols) && x.is_finite()
    }

    fn check_tangent(&self, _x: &Point, v: &Tangent, _tol: f64) -> bool {
        v.shape() == (self.rows, self.cols) && v.0.iter().all(|t| t.is_finite())
    }
}
