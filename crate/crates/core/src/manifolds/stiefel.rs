//! The Stiefel manifold St(n,p) of n x p matrices with orthonormal columns,
//! as a Riemannian submanifold of R^{n x p}, with the Q-factor retraction.

use nalgebra::DMatrix;

use super::{gaussian_matrix, Dretract, Manifold, Point, Tangent};
use crate::linalg::thin_qr_pos;

#[derive(Debug, Clone)]
pub struct Stiefel {
    n: usize,
    p: usize,
}

impl Stiefel {
    pub fn new(n: usize, p: usize) -> Self {
        assert!(p >= 1 && n >= p, "Stiefel requires n >= p >= 1");
        Stiefel { n, p }
    }
}

pub(crate) fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

/// Lower-triangular part (diagonal included), everything else zeroed.
fn tril(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    DMatrix::from_fn(r, c, |i, j| if i >= j { m[(i, j)] } else { 0.0 })
}

/// rho_skew(M) = tril(M) - tril(M)^T, the skew map in the Q-factor differential.
fn rho_skew(m: &DMatrix<f64>) -> DMatrix<f64> {
    let t = tril(m);
    &t - t.transpose()
}

/// Differential of the Q-factor retraction at (X, S) applied to a tangent Z:
/// `Q rho_skew(Q^T Z R^-1) + (I - Q Q^T) Z R^-1` with X + S = QR.
pub(crate) fn qf_dretract(x: &DMatrix<f64>, s: &DMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
    let (q, r) = thin_qr_pos(&(x + s)).expect("X + S has full column rank for tangent S");
    let r_inv = r
        .try_inverse()
        .expect("R is invertible for tangent S");
    let zr = z * &r_inv;
    let qtzr = q.transpose() * &zr;
    &q * rho_skew(&qtzr) + (&zr - &q * (q.transpose() * &zr))
}

/// Ambient adjoint of the Q-factor differential applied to W.
pub(crate) fn qf_dretract_adjoint(
    x: &DMatrix<f64>,
    s: &DMatrix<f64>,
    w: &DMatrix<f64>,
) -> DMatrix<f64> {
    let (q, r) = thin_qr_pos(&(x + s)).expect("X + S has full column rank for tangent S");
    let r_inv = r.try_inverse().expect("R is invertible for tangent S");
    let rint = r_inv.transpose();
    let qtw = q.transpose() * w;
    let b = tril(&(&qtw - qtw.transpose()));
    &q * (&b * &rint) + (w - &q * &qtw) * &rint
}

impl Manifold for Stiefel {
    fn name(&self) -> String {
        format!("Stiefel({},{})", self.n, self.p)
    }

    fn dim(&self) -> usize {
        self.n * self.p - self.p * (self.p + 1) / 2
    }

    fn ambient_shape(&self) -> (usize, usize) {
        (self.n, self.p)
    }

    fn project_tangent(&self, x: &Point, z: &DMatrix<f64>) -> Tangent {
        let xtz = x.0.transpose() * z;
        Tangent(z - &x.0 * sym(&xtz))
    }

    fn retract(&self, x: &Point, s: &Tangent) -> Point {
        let (q, _) = thin_qr_pos(&(&x.0 + &s.0)).expect("X + S has full column rank for tangent S");
        Point(q)
    }

    fn dretract(&self, x: &Point, s: &Tangent, z: &Tangent) -> Dretract {
        Dretract {
            vector: Tangent(qf_dretract(&x.0, &s.0, &z.0)),
            finite_difference: false,
        }
    }

    fn dretract_adjoint(&self, x: &Point, s: &Tangent, amb: &DMatrix<f64>) -> Tangent {
        let w = qf_dretract_adjoint(&x.0, &s.0, amb);
        self.project_tangent(x, &w)
    }

    fn ehess2rhess(
        &self,
        x: &Point,
        eg: &DMatrix<f64>,
        eh: &DMatrix<f64>,
        s: &Tangent,
    ) -> Tangent {
        let xtg = x.0.transpose() * eg;
        let corrected = eh - &s.0 * sym(&xtg);
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
        let xtv = x.0.transpose() * &v.0;
        (&xtv + xtv.transpose()).norm() <= tol * v.norm().max(1.0)
    }
}

