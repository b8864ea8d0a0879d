//! The oblique manifold OB(n,p): n x p matrices with unit-norm rows,
//! a product of n spheres S^{p-1} glued row-wise.

use nalgebra::{DMatrix, RowDVector};

use super::{gaussian_matrix, Dretract, Manifold, Point, Tangent};

#[derive(Debug, Clone)]
pub struct Oblique {
    n: usize,
    p: usize,
}

impl Oblique {
    pub fn new(n: usize, p: usize) -> Self {
        assert!(n >= 1 && p >= 2, "Oblique requires p >= 2");
        Oblique { n, p }
    }
}

fn row_dot(a: &DMatrix<f64>, b: &DMatrix<f64>, i: usize) -> f64 {
    a.row(i).dot(&b.row(i))
}

impl Manifold for Oblique {
    fn name(&self) -> String {
        format!("Oblique({},{})", self.n, self.p)
    }

    fn dim(&self) -> usize {
        self.n * (self.p - 1)
    }

    fn ambient_shape(&self) -> (usize, usize) {
        (self.n, self.p)
    }

    fn project_tangent(&self, x: &Point, z: &DMatrix<f64>) -> Tangent {
        let mut t = z.clone();
        for i in 0..self.n {
            let c = row_dot(&x.0, z, i);
            let xi = x.0.row(i).into_owned();
            t.set_row(i, &(z.row(i) - c * xi));
        }
        Tangent(t)
    }

    fn retract(&self, x: &Point, s: &Tangent) -> Point {
        let mut y = &x.0 + &s.0;
        for i in 0..self.n {
            let n = y.row(i).norm();
            let row = (y.row(i) / n).into_owned();
            y.set_row(i, &row);
        }
        Point(y)
    }

    fn dretract(&self, x: &Point, s: &Tangent, z: &Tangent) -> Dretract {
        // Row-wise sphere formula.
        let y = self.retract(x, s);
        let mut out = DMatrix::zeros(self.n, self.p);
        for i in 0..self.n {
            let si = s.0.row(i);
            let scale = 1.0 / (1.0 + si.dot(&si)).sqrt();
            let ri: RowDVector<f64> = y.0.row(i).into_owned();
            let zi = z.0.row(i);
            let w = scale * (zi - zi.dot(&ri) * &ri);
            out.set_row(i, &w);
        }
        Dretract {
            vector: Tangent(out),
            finite_difference: false,
        }
    }

    fn dretract_adjoint(&self, x: &Point, s: &Tangent, amb: &DMatrix<f64>) -> Tangent {
        // The row-wise DR is symmetric as an ambient map, like the sphere's.
        let y = self.retract(x, s);
        let mut out = DMatrix::zeros(self.n, self.p);
        for i in 0..self.n {
            let si = s.0.row(i);
            let scale = 1.0 / (1.0 + si.dot(&si)).sqrt();
            let ri: RowDVector<f64> = y.0.row(i).into_owned();
            let wi = amb.row(i);
            let w = scale * (wi - wi.dot(&ri) * &ri);
            out.set_row(i, &w);
        }
        self.project_tangent(x, &out)
    }

    fn ehess2rhess(
        &self,
        x: &Point,
        eg: &DMatrix<f64>,
        eh: &DMatrix<f64>,
        s: &Tangent,
    ) -> Tangent {
        let mut out = self.project_tangent(x, eh).0;
        for i in 0..self.n {
            let c = row_dot(&x.0, eg, i);
            let row = (out.row(i) - c * s.0.row(i)).into_owned();
            out.set_row(i, &row);
        }
        Tangent(out)
    }

    fn rand_point(&self, rng: &mut dyn rand::RngCore) -> Point {
        let mut y = gaussian_matrix(self.n, self.p, rng);
        for i in 0..self.n {
            let n = y.row(i).norm();
            let row = (y.row(i) / n).into_owned();
            y.set_row(i, &row);
        }
        Point(y)
    }

    fn check_point(&self, x: &Point, tol: f64) -> bool {
        if x.shape() != (self.n, self.p) || !x.is_finite() {
            return false;
        }
        (0..self.n).all(|i| (x.0.row(i).norm() - 1.0).abs() <= tol)
    }

    fn check_tangent(&self, x: &Point, v: &Tangent, tol: f64) -> bool {
        if v.shape() != (self.n, self.p) {
            return false;
        }
        let scale = v.norm().max(1.0);
        (0..self.n).all(|i| row_dot(&x.0, &v.0, i).abs() <= tol * scale)
    }
}

