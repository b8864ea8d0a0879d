//! ShapeFit: recover n points in R^d from pairwise direction observations.
//! With directions `v_ij = (x_i - x_j)/||x_i - x_j||`, minimize
//!
//! `cost(y) = sum_(i,j) || (y_i - y_j) - v_ij v_ij^T (y_i - y_j) ||^2`
//!
//! over the affine slice `{ sum_i y_i = 0, sum_(i,j) <y_i - y_j, v_ij> = 1 }`.
//! The cost is a positive semidefinite quadratic, so the problem is linear
//! least squares in disguise; the direct KKT solve serves as the oracle.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{GroundTruth, Instance, Problem};
use crate::manifolds::{gaussian_matrix, AffineSubspace, Point, Tangent};
use crate::{Error, Result};

struct ShapeData {
    n: usize,
    d: usize,
    /// Edges (i, j) with the unit direction of x_i - x_j.
    edges: Vec<(usize, usize, DVector<f64>)>,
}

impl ShapeData {
    fn cost(&self, y: &DMatrix<f64>) -> f64 {
        let mut total = 0.0;
        for (i, j, v) in &self.edges {
            let diff = (y.row(*i) - y.row(*j)).transpose();
            let proj = &diff - v * v.dot(&diff);
            total += proj.norm_squared();
        }
        total
    }

    /// Gradient of the quadratic: per edge, `2 P (y_i - y_j)` on row i and
    /// the negative on row j, with `P = I - v v^T`.
    fn egrad(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.n, self.d);
        for (i, j, v) in &self.edges {
            let diff = (y.row(*i) - y.row(*j)).transpose();
            let p = &diff - v * v.dot(&diff);
            for c in 0..self.d {
                g[(*i, c)] += 2.0 * p[c];
                g[(*j, c)] -= 2.0 * p[c];
            }
        }
        g
    }
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == n
}

pub fn make_shapefit(
    n: usize,
    d: usize,
    edge_prob: f64,
    rng: &mut dyn rand::RngCore,
) -> Result<Instance> {
    use rand::Rng;
    if n < 3 {
        return Err(Error::InvalidArgument("need at least 3 points".into()));
    }
    // Ground-truth points, centered.
    let mut x = gaussian_matrix(n, d, rng);
    let mean = x.row_mean();
    for i in 0..n {
        let r = (x.row(i) - &mean).into_owned();
        x.set_row(i, &r);
    }

    let mut pairs = Vec::new();
    let mut tries = 0;
    loop {
        pairs.clear();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(edge_prob) {
                    pairs.push((i, j));
                }
            }
        }
        if connected(n, &pairs) {
            break;
        }
        tries += 1;
        if tries > 50 {
            return Err(Error::InvalidArgument(format!(
                "could not draw a connected graph on {n} nodes at edge probability {edge_prob}"
            )));
        }
    }

    let edges: Vec<(usize, usize, DVector<f64>)> = pairs
        .iter()
        .map(|&(i, j)| {
            let diff = (x.row(i) - x.row(j)).transpose();
            let nrm = diff.norm();
            (i, j, diff / nrm)
        })
        .collect();

    // Constraints on vec(y) (column-major): the d centering rows and the
    // scale row sum_(i,j) <y_i - y_j, v_ij> = 1.
    let ambient = n * d;
    let mut cons = DMatrix::zeros(d + 1, ambient);
    for c in 0..d {
        for i in 0..n {
            cons[(c, c * n + i)] = 1.0;
        }
    }
    for (i, j, v) in &edges {
        for c in 0..d {
            cons[(d, c * n + i)] += v[c];
            cons[(d, c * n + j)] -= v[c];
        }
    }
    let mut rhs = DVector::zeros(d + 1);
    rhs[d] = 1.0;
    let manifold = AffineSubspace::new(n, d, cons, rhs)?;

    // The rescaled truth satisfies the constraints with cost zero.
    let scale: f64 = edges
        .iter()
        .map(|(i, j, v)| (x.row(*i) - x.row(*j)).transpose().dot(v))
        .sum();
    let normalized = &x / scale;

    let data = Arc::new(ShapeData { n, d, edges });
    let (d1, d2, d3) = (data.clone(), data.clone(), data);
    let problem = Problem::new(
        "shapefit",
        move |y: &Point| d1.cost(&y.0),
        move |y: &Point| d2.egrad(&y.0),
        move |_y: &Point, s: &Tangent| d3.egrad(&s.0), // constant Hessian: quadratic cost
        Some(0.0),
    );

    Ok(Instance {
        manifold: Box::new(manifold),
        problem,
        truth: GroundTruth::Points(normalized),
        x0: None,
    })
}

/// Direct solution of the constrained linear least-squares problem: the cost
/// is quadratic and the search space affine, so one dense solve in an
/// orthonormal tangent basis minimizes it exactly. Independent of the
/// iterative solvers.
pub fn solve_shapefit_direct(inst: &Instance) -> Point {
    use rand::SeedableRng;
    let m = inst.manifold.as_ref();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let y0 = m.rand_point(&mut rng);
    let basis = crate::manifolds::tangent_basis(m, &y0, crate::manifolds::DENSE_DIM_CAP)
        .expect("shapefit dimension stays under the dense cap");
    let dim = basis.len();

    // Quadratic cost: egrad(y) = 2 Q y, ehessvec(s) = 2 Q s.
    let g0 = inst.problem.egrad(&y0);
    let mut rhs = DVector::zeros(dim);
    let mut mat = DMatrix::zeros(dim, dim);
    let qb: Vec<DMatrix<f64>> = basis
        .iter()
        .map(|b| inst.problem.ehessvec(&y0, b))
        .collect();
    for i in 0..dim {
        rhs[i] = -crate::linalg::fdot(&basis[i].0, &g0);
        for j in 0..dim {
            mat[(i, j)] = crate::linalg::fdot(&basis[i].0, &qb[j]);
        }
    }
    let coef = crate::linalg::lstsq(&mat, &rhs);
    let mut y = y0.0;
    for (i, b) in basis.iter().enumerate() {
        y += coef[i] * &b.0;
    }
    Point(y)
}
