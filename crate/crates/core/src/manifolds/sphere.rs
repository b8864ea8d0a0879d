//! The unit sphere S^{n-1} in R^n.
//!
//! Two retractions are available: the metric projection
//! `R_x(s) = (x+s)/||x+s||` (the default) and the exponential map along great
//! circles. Both have closed-form differentials and adjoints.

use nalgebra::DMatrix;

use super::{gaussian_matrix, Dretract, Manifold, Point, RetractionKind, Tangent};
use crate::linalg::fdot;

#[derive(Debug, Clone)]
pub struct Sphere {
    n: usize,
    retraction: RetractionKind,
}

impl Sphere {
    /// Unit sphere in R^n with the projective retraction.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "sphere needs ambient dimension >= 2");
        Sphere {
            n,
            retraction: RetractionKind::Canonical,
        }
    }

    /// Unit sphere with the exponential (great-circle) retraction.
    pub fn with_exponential(n: usize) -> Self {
        Sphere {
            n,
            retraction: RetractionKind::Exponential,
        }
    }
}

impl Manifold for Sphere {
    fn name(&self) -> String {
        match self.retraction {
            RetractionKind::Canonical => format!("Sphere({})", self.n),
            RetractionKind::Exponential => format!("Sphere({}, exp)", self.n),
        }
    }

    fn dim(&self) -> usize {
        self.n - 1
    }

    fn ambient_shape(&self) -> (usize, usize) {
        (self.n, 1)
    }

    fn retraction_kind(&self) -> RetractionKind {
        self.retraction
    }

    fn project_tangent(&self, x: &Point, z: &DMatrix<f64>) -> Tangent {
        Tangent(z - fdot(&x.0, z) * &x.0)
    }

    fn retract(&self, x: &Point, s: &Tangent) -> Point {
        match self.retraction {
            RetractionKind::Canonical => {
                let y = &x.0 + &s.0;
                let n = y.norm();
                Point(y / n)
            }
            RetractionKind::Exponential => {
                let a = s.norm();
                if a < 1e-300 {
                    return x.clone();
                }
                Point(a.cos() * &x.0 + (a.sin() / a) * &s.0)
            }
        }
    }

    fn dretract(&self, x: &Point, s: &Tangent, z: &Tangent) -> Dretract {
        let vector = match self.retraction {
            RetractionKind::Canonical => {
                // (1/sqrt(1+||s||^2)) (I - r r^T) z with r the retracted point.
                let r = self.retract(x, s).0;
                let scale = 1.0 / (1.0 + s.norm().powi(2)).sqrt();
                Tangent(scale * (&z.0 - fdot(&r, &z.0) * &r))
            }
            RetractionKind::Exponential => {
                let a = s.norm();
                if a < 1e-300 {
                    return Dretract {
                        vector: z.clone(),
                        finite_difference: false,
                    };
                }
                let u = &s.0 / a;
                let uz = fdot(&u, &z.0);
                let par = uz * (-a.sin() * &x.0 + a.cos() * &u);
                let perp = (a.sin() / a) * (&z.0 - uz * &u);
                Tangent(par + perp)
            }
        };
        Dretract {
            vector,
            finite_difference: false,
        }
    }

    fn dretract_adjoint(&self, x: &Point, s: &Tangent, amb: &DMatrix<f64>) -> Tangent {
        match self.retraction {
            RetractionKind::Canonical => {
                // The canonical DR is symmetric as an ambient map.
                let r = self.retract(x, s).0;
                let scale = 1.0 / (1.0 + s.norm().powi(2)).sqrt();
                let w = scale * (amb - fdot(&r, amb) * &r);
                self.project_tangent(x, &w)
            }
            RetractionKind::Exponential => {
                let a = s.norm();
                if a < 1e-300 {
                    return self.project_tangent(x, amb);
                }
                let u = &s.0 / a;
                let coef = fdot(amb, &(-a.sin() * &x.0 + a.cos() * &u));
                let w = coef * &u + (a.sin() / a) * (amb - fdot(amb, &u) * &u);
                self.project_tangent(x, &w)
            }
        }
    }

    fn ehess2rhess(
        &self,
        x: &Point,
        eg: &DMatrix<f64>,
        eh: &DMatrix<f64>,
        s: &Tangent,
    ) -> Tangent {
        let proj = self.project_tangent(x, eh);
        Tangent(proj.0 - fdot(&x.0, eg) * &s.0)
    }

    fn rand_point(&self, rng: &mut dyn rand::RngCore) -> Point {
        loop {
            let z = gaussian_matrix(self.n, 1, rng);
            let n = z.norm();
            if n > 1e-8 {
                return Point(z / n);
            }
        }
    }

    fn check_point(&self, x: &Point, tol: f64) -> bool {
        x.shape() == (self.n, 1) && x.is_finite() && (x.0.norm() - 1.0).abs() <= tol
    }

    fn check_tangent(&self, x: &Point, v: &Tangent, tol: f64) -> bool {
        v.shape() == (self.n, 1) && fdot(&x.0, &v.0).abs() <= tol * v.norm().max(1.0)
    }
}
