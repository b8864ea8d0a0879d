//! The rotation group SO(d), and powers SO(d)^k, stored as k stacked d x d
//! blocks in a (k*d) x d matrix. Tangent vectors satisfy X^T S skew per block.

use nalgebra::DMatrix;

use super::stiefel::{qf_dretract, qf_dretract_adjoint, sym};
use super::{gaussian_matrix, Dretract, Manifold, Point, RetractionKind, Tangent};
use crate::linalg::{expm_skew, thin_qr_pos};

#[derive(Debug, Clone)]
pub struct Rotations {
    d: usize,
    count: usize,
    retraction: RetractionKind,
}

impl Rotations {
    /// SO(d)^count with the block-wise Q-factor retraction.
    pub fn new(d: usize, count: usize) -> Self {
        assert!(d >= 2 && count >= 1, "Rotations requires d >= 2, count >= 1");
        Rotations {
            d,
            count,
            retraction: RetractionKind::Canonical,
        }
    }

    /// SO(d)^count with the exponential retraction `X expm(X^T S)`.
    pub fn with_exponential(d: usize, count: usize) -> Self {
        Rotations {
            d,
            count,
            retraction: RetractionKind::Exponential,
        }
    }

    pub fn block_size(&self) -> usize {
        self.d
    }

    pub fn block_count(&self) -> usize {
        self.count
    }

    fn block(&self, m: &DMatrix<f64>, i: usize) -> DMatrix<f64> {
        m.rows(i * self.d, self.d).into_owned()
    }
}

impl Manifold for Rotations {
    fn name(&self) -> String {
        let base = if self.count == 1 {
            format!("SO({})", self.d)
        } else {
            format!("SO({})^{}", self.d, self.count)
        };
        match self.retraction {
            RetractionKind::Canonical => base,
            RetractionKind::Exponential => format!("{base} (exp)"),
        }
    }

    fn dim(&self) -> usize {
        self.count * self.d * (self.d - 1) / 2
    }

    fn ambient_shape(&self) -> (usize, usize) {
        (self.count * self.d, self.d)
    }

    fn retraction_kind(&self) -> RetractionKind {
        self.retraction
    }

    fn project_tangent(&self, x: &Point, z: &DMatrix<f64>) -> Tangent {
        let mut out = DMatrix::zeros(self.count * self.d, self.d);
        for i in 0..self.count {
            let xi = self.block(&x.0, i);
            let zi = self.block(z, i);
            let ti = &zi - &xi * sym(&(xi.transpose() * &zi));
            out.rows_mut(i * self.d, self.d).copy_from(&ti);
        }
        Tangent(out)
    }

    fn retract(&self, x: &Point, s: &Tangent) -> Point {
        let mut out = DMatrix::zeros(self.count * self.d, self.d);
        for i in 0..self.count {
            let xi = self.block(&x.0, i);
            let si = self.block(&s.0, i);
            let yi = match self.retraction {
                RetractionKind::Canonical => {
                    // det(X+S) > 0 for tangent S, so the Q factor stays in SO(d).
                    thin_qr_pos(&(&xi + &si))
                        .expect("X + S has full rank for tangent S")
                        .0
                }
                RetractionKind::Exponential => {
                    let omega = xi.transpose() * &si;
                    let skew = 0.5 * (&omega - omega.transpose());
                    &xi * expm_skew(&skew)
                }
            };
            out.rows_mut(i * self.d, self.d).copy_from(&yi);
        }
        Point(out)
    }

    fn dretract(&self, x: &Point, s: &Tangent, z: &Tangent) -> Dretract {
        match self.retraction {
            RetractionKind::Canonical => {
                let mut out = DMatrix::zeros(self.count * self.d, self.d);
                for i in 0..self.count {
                    let wi = qf_dretract(
                        &self.block(&x.0, i),
                        &self.block(&s.0, i),
                        &self.block(&z.0, i),
                    );
                    out.rows_mut(i * self.d, self.d).copy_from(&wi);
                }
                Dretract {
                    vector: Tangent(out),
                    finite_difference: false,
                }
            }
            // No closed form implemented for the exponential differential;
            // fall back to projected central differences.
            RetractionKind::Exponential => {
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
        }
    }

    fn dretract_adjoint(&self, x: &Point, s: &Tangent, amb: &DMatrix<f64>) -> Tangent {
        match self.retraction {
            RetractionKind::Canonical => {
                let mut out = DMatrix::zeros(self.count * self.d, self.d);
                for i in 0..self.count {
                    let wi = qf_dretract_adjoint(
                        &self.block(&x.0, i),
                        &self.block(&s.0, i),
                        &self.block(amb, i),
                    );
                    out.rows_mut(i * self.d, self.d).copy_from(&wi);
                }
                self.project_tangent(x, &out)
            }
            RetractionKind::Exponential => {
                // Basis expansion via the finite-difference dretract.
                let basis = super::tangent_basis(self, x, super::DENSE_DIM_CAP)
                    .expect("rotation groups stay under the dense cap");
                let mut w = DMatrix::zeros(self.count * self.d, self.d);
                for e in &basis {
                    let de = self.dretract(x, s, e);
                    w += crate::linalg::fdot(amb, &de.vector.0) * &e.0;
                }
                Tangent(w)
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
        let mut out = DMatrix::zeros(self.count * self.d, self.d);
        for i in 0..self.count {
            let xi = self.block(&x.0, i);
            let egi = self.block(eg, i);
            let ehi = self.block(eh, i);
            let si = self.block(&s.0, i);
            let corrected = &ehi - &si * sym(&(xi.transpose() * &egi));
            let ti = &corrected - &xi * sym(&(xi.transpose() * &corrected));
            out.rows_mut(i * self.d, self.d).copy_from(&ti);
        }
        Tangent(out)
    }

    fn rand_point(&self, rng: &mut dyn rand::RngCore) -> Point {
        let mut out = DMatrix::zeros(self.count * self.d, self.d);
        for i in 0..self.count {
            let q = loop {
                let g = gaussian_matrix(self.d, self.d, rng);
                if let Ok((mut q, _)) = thin_qr_pos(&g) {
                    // Sign fix: flip one column if needed to land in SO(d).
                    if q.determinant() < 0.0 {
                        let col = (q.column(self.d - 1) * -1.0).into_owned();
                        q.set_column(self.d - 1, &col);
                    }
                    break q;
                }
            };
            out.rows_mut(i * self.d, self.d).copy_from(&q);
        }
        Point(out)
    }

    fn check_point(&self, x: &Point, tol: f64) -> bool {
        if x.shape() != self.ambient_shape() || !x.is_finite() {
            return false;
        }
        (0..self.count).all(|i| {
            let xi = self.block(&x.0, i);
            let gram_ok =
                (xi.transpose() * &xi - DMatrix::identity(self.d, self.d)).norm() <= tol;
            gram_ok && (xi.determinant() - 1.0).abs() <= 10.0 * tol.max(1e-12)
        })
    }

    fn check_tangent(&self, x: &Point, v: &Tangent, tol: f64) -> bool {
        if v.shape() != self.ambient_shape() {
            return false;
        }
        let scale = v.norm().max(1.0);
        (0..self.count).all(|i| {
            let xi = self.block(&x.0, i);
            let vi = self.block(&v.0, i);
            let m = xi.transpose() * &vi;
            (&m + m.transpose()).norm() <= tol * scale
        })
    }
}
