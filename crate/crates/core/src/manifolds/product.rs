//! Product manifold over a flat, concatenated data layout.
//!
//! Each factor's ambient matrix is flattened column-major into a slice of a
//! single (total_len, 1) column; every operation applies factor-wise. The
//! metric is the sum of factor metrics, which the Frobenius product on the
//! concatenation gives for free.

use nalgebra::DMatrix;

use super::{Dretract, Manifold, Point, RetractionKind, Tangent};

pub struct ProductManifold {
    factors: Vec<Box<dyn Manifold>>,
    offsets: Vec<usize>,
    total: usize,
}

impl ProductManifold {
    pub fn new(factors: Vec<Box<dyn Manifold>>) -> Self {
        assert!(!factors.is_empty(), "product of zero manifolds");
        let mut offsets = Vec::with_capacity(factors.len());
        let mut total = 0;
        for f in &factors {
            offsets.push(total);
            let (r, c) = f.ambient_shape();
            total += r * c;
        }
        ProductManifold {
            factors,
            offsets,
            total,
        }
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, i: usize) -> &dyn Manifold {
        self.factors[i].as_ref()
    }

    /// Extract factor `i` from a concatenated column as its ambient matrix.
    pub fn factor_slice(&self, data: &DMatrix<f64>, i: usize) -> DMatrix<f64> {
        let (r, c) = self.factors[i].ambient_shape();
        let off = self.offsets[i];
        DMatrix::from_column_slice(r, c, &data.as_slice()[off..off + r * c])
    }

    /// Write factor `i` back into a concatenated column.
    pub fn set_factor_slice(&self, data: &mut DMatrix<f64>, i: usize, value: &DMatrix<f64>) {
        let (r, c) = self.factors[i].ambient_shape();
        let off = self.offsets[i];
        data.as_mut_slice()[off..off + r * c].copy_from_slice(value.as_slice());
    }

    /// Assemble a concatenated column from per-factor matrices.
    pub fn pack(&self, parts: &[DMatrix<f64>]) -> DMatrix<f64> {
        assert_eq!(parts.len(), self.factors.len());
        let mut out = DMatrix::zeros(self.total, 1);
        for (i, p) in parts.iter().enumerate() {
            self.set_factor_slice(&mut out, i, p);
        }
        out
    }

    fn map_factors(
        &self,
        inputs: &[&DMatrix<f64>],
        f: impl Fn(&dyn Manifold, &[DMatrix<f64>]) -> DMatrix<f64>,
    ) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.total, 1);
        for i in 0..self.factors.len() {
            let parts: Vec<DMatrix<f64>> =
                inputs.iter().map(|m| self.factor_slice(m, i)).collect();
            let r = f(self.factors[i].as_ref(), &parts);
            self.set_factor_slice(&mut out, i, &r);
        }
        out
    }
}

impl Manifold for ProductManifold {
    fn name(&self) -> String {
        let names: Vec<String> = self.factors.iter().map(|f| f.name()).collect();
        format!("Product[{}]", names.join(" x "))
    }

    fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim()).sum()
    }

    fn ambient_shape(&self) -> (usize, usize) {
        (self.total, 1)
    }

    fn retraction_kind(&self) -> RetractionKind {
        if self
            .factors
            .iter()
            .all(|f| f.retraction_kind() == RetractionKind::Exponential)
        {
            RetractionKind::Exponential
        } else {
            RetractionKind::Canonical
        }
    }

    fn project_tangent(&self, x: &Point, z: &DMatrix<f64>) -> Tangent {
        Tangent(self.map_factors(&[&x.0, z], |m, p| {
            m.project_tangent(&Point(p[0].clone()), &p[1]).0
        }))
    }

    fn retract(&self, x: &Point, s: &Tangent) -> Point {
        Point(self.map_factors(&[&x.0, &s.0], |m, p| {
            m.retract(&Point(p[0].clone()), &Tangent(p[1].clone())).0
        }))
    }

    fn dretract(&self, x: &Point, s: &Tangent, z: &Tangent) -> Dretract {
        let mut fd = false;
        let mut out = DMatrix::zeros(self.total, 1);
        for i in 0..self.factors.len() {
            let m = self.factors[i].as_ref();
            let xi = Point(self.factor_slice(&x.0, i));
            let si = Tangent(self.factor_slice(&s.0, i));
            let zi = Tangent(self.factor_slice(&z.0, i));
            let di = m.dretract(&xi, &si, &zi);
            fd |= di.finite_difference;
            self.set_factor_slice(&mut out, i, &di.vector.0);
        }
        Dretract {
            vector: Tangent(out),
            finite_difference: fd,
        }
    }

    fn dretract_adjoint(&self, x: &Point, s: &Tangent, amb: &DMatrix<f64>) -> Tangent {
        Tangent(self.map_factors(&[&x.0, &s.0, amb], |m, p| {
            m.dretract_adjoint(&Point(p[0].clone()), &Tangent(p[1].clone()), &p[2])
                .0
        }))
    }

    fn ehess2rhess(
        &self,
        x: &Point,
        eg: &DMatrix<f64>,
        eh: &DMatrix<f64>,
        s: &Tangent,
    ) -> Tangent {
        Tangent(self.map_factors(&[&x.0, eg, eh, &s.0], |m, p| {
            m.ehess2rhess(&Point(p[0].clone()), &p[1], &p[2], &Tangent(p[3].clone()))
                .0
        }))
    }

    fn rand_point(&self, rng: &mut dyn rand::RngCore) -> Point {
        let mut out = DMatrix::zeros(self.total, 1);
        for i in 0..self.factors.len() {
            let p = self.factors[i].rand_point(rng);
            self.set_factor_slice(&mut out, i, &p.0);
        }
        Point(out)
    }

    fn check_point(&self, x: &Point, tol: f64) -> bool {
        if x.shape() != (self.total, 1) {
            return false;
        }
        (0..self.factors.len()).all(|i| {
            self.factors[i].check_point(&Point(self.factor_slice(&x.0, i)), tol)
        })
    }

    fn check_tangent(&self, x: &Point, v: &Tangent, tol: f64) -> bool {
        if v.shape() != (self.total, 1) {
            return false;
        }
        (0..self.factors.len()).all(|i| {
            self.factors[i].check_tangent(
                &Point(self.factor_slice(&x.0, i)),
                &Tangent(self.factor_slice(&v.0, i)),
                tol,
            )
        })
    }
}
