//! Synchronization of rotations: estimate m rotations from noisy relative
//! measurements `H_ij ~ Q_i Q_j^T` on a connected Erdos-Renyi edge set, by
//! least squares:
//!
//! `cost(Q) = sum_(i,j) ||Q_i Q_j^T - H_ij||_F^2 / 2`
//!
//! The instance ships a deterministic spectral initial guess (top-d
//! eigenvectors of the measurement block matrix, blocks projected to SO(d)).

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{GroundTruth, Instance, Problem};
use crate::linalg::{expm_skew, sym_eig};
use crate::manifolds::{gaussian_matrix, Manifold, Point, Rotations, Tangent};
use crate::{Error, Result};

fn block(m: &DMatrix<f64>, i: usize, d: usize) -> DMatrix<f64> {
    m.rows(i * d, d).into_owned()
}

/// Nearest special-orthogonal matrix (polar factor with a determinant fix).
pub(crate) fn project_so(m: &DMatrix<f64>) -> DMatrix<f64> {
    let d = m.nrows();
    let svd = m.clone().svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut r = &u * &vt;
    if r.determinant() < 0.0 {
        // Flip the weakest singular direction.
        let mut u2 = u;
        let col = (u2.column(d - 1) * -1.0).into_owned();
        u2.set_column(d - 1, &col);
        r = u2 * vt;
    }
    r
}

fn connected(m: usize, edges: &[(usize, usize)]) -> bool {
    if m == 0 {
        return false;
    }
    let mut adj = vec![Vec::new(); m];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; m];
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
    count == m
}

struct SyncData {
    d: usize,
    m: usize,
    /// Edges as 0-based pairs with their measurements.
    edges: Vec<(usize, usize, DMatrix<f64>)>,
}

impl SyncData {
    fn cost(&self, q: &DMatrix<f64>) -> f64 {
        let mut total = 0.0;
        for (i, j, h) in &self.edges {
            let e = block(q, *i, self.d) * block(q, *j, self.d).transpose() - h;
            total += e.norm_squared();
        }
        0.5 * total
    }

    fn egrad(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.m * self.d, self.d);
        for (i, j, h) in &self.edges {
            let qi = block(q, *i, self.d);
            let qj = block(q, *j, self.d);
            let e = &qi * qj.transpose() - h;
            let gi = &e * &qj;
            let gj = e.transpose() * &qi;
            for r in 0..self.d {
                for c in 0..self.d {
                    g[(i * self.d + r, c)] += gi[(r, c)];
                    g[(j * self.d + r, c)] += gj[(r, c)];
                }
            }
        }
        g
    }

    fn ehessvec(&self, q: &DMatrix<f64>, s: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.m * self.d, self.d);
        for (i, j, h) in &self.edges {
            let qi = block(q, *i, self.d);
            let qj = block(q, *j, self.d);
            let si = block(s, *i, self.d);
            let sj = block(s, *j, self.d);
            let e = &qi * qj.transpose() - h;
            let de = &si * qj.transpose() + &qi * sj.transpose();
            let hi = &de * &qj + &e * &sj;
            let hj = de.transpose() * &qi + e.transpose() * &si;
            for r in 0..self.d {
                for c in 0..self.d {
                    out[(i * self.d + r, c)] += hi[(r, c)];
                    out[(j * self.d + r, c)] += hj[(r, c)];
                }
            }
        }
        out
    }

    /// Spectral-style initializer: top-d eigenvectors of the symmetric block
    /// measurement matrix, each block projected to SO(d). Deterministic.
    fn spectral_init(&self) -> DMatrix<f64> {
        let n = self.m * self.d;
        let mut w = DMatrix::zeros(n, n);
        for (i, j, h) in &self.edges {
            for r in 0..self.d {
                for c in 0..self.d {
                    w[(i * self.d + r, j * self.d + c)] = h[(r, c)];
                    w[(j * self.d + c, i * self.d + r)] = h[(r, c)];
                }
            }
        }
        let (_, vecs) = sym_eig(&w);
        // Top-d eigenvectors are the last d columns (ascending order).
        let mut v = DMatrix::zeros(n, self.d);
        for c in 0..self.d {
            v.set_column(c, &vecs.column(n - 1 - c).into_owned());
        }
        let mut out = DMatrix::zeros(n, self.d);
        for i in 0..self.m {
            let b = project_so(&block(&v, i, self.d));
            for r in 0..self.d {
                for c in 0..self.d {
                    out[(i * self.d + r, c)] = b[(r, c)];
                }
            }
        }
        out
    }
}

pub fn make_rotation_sync(
    m: usize,
    d: usize,
    edge_prob: f64,
    noise: f64,
    rng: &mut dyn rand::RngCore,
) -> Result<Instance> {
    use rand::Rng;
    if !(2..=3).contains(&d) {
        return Err(Error::InvalidArgument(format!(
            "rotation blocks of size {d} not supported (d must be 2 or 3)"
        )));
    }
    let manifold = Rotations::new(d, m);
    let truth = manifold.rand_point(rng);

    // Connected Erdos-Renyi edge set on index pairs (resampled on failure).
    let mut pairs = Vec::new();
    if m > 1 {
        let mut tries = 0;
        loop {
            pairs.clear();
            for i in 0..m {
                for j in (i + 1)..m {
                    if rng.gen_bool(edge_prob) {
                        pairs.push((i, j));
                    }
                }
            }
            if connected(m, &pairs) {
                break;
            }
            tries += 1;
            if tries > 50 {
                return Err(Error::InvalidArgument(format!(
                    "could not draw a connected graph on {m} nodes at edge probability {edge_prob}"
                )));
            }
        }
    }

    let edges: Vec<(usize, usize, DMatrix<f64>)> = pairs
        .iter()
        .map(|&(i, j)| {
            let qi = block(&truth.0, i, d);
            let qj = block(&truth.0, j, d);
            let mut h = &qi * qj.transpose();
            if noise > 0.0 {
                let g = gaussian_matrix(d, d, rng);
                let skew = noise * 0.5 * (&g - g.transpose());
                h = expm_skew(&skew) * h;
            }
            (i, j, h)
        })
        .collect();

    let data = Arc::new(SyncData { d, m, edges });
    let x0 = if m > 1 {
        Some(Point(data.spectral_init()))
    } else {
        Some(Point(truth.0.clone()))
    };

    let (d1, d2, d3) = (data.clone(), data.clone(), data);
    let problem = Problem::new(
        "rotation-sync",
        move |x: &Point| d1.cost(&x.0),
        move |x: &Point| d2.egrad(&x.0),
        move |x: &Point, s: &Tangent| d3.ehessvec(&x.0, &s.0),
        Some(0.0),
    );

    Ok(Instance {
        manifold: Box::new(manifold),
        problem,
        truth: GroundTruth::Rotations(truth.0),
        x0,
    })
}

/// Largest per-block Frobenius distance to the truth after the best global
/// right-rotation (Procrustes over SO(d)).
pub fn alignment_error(inst: &Instance, estimate: &Point) -> f64 {
    let GroundTruth::Rotations(truth) = &inst.truth else {
        panic!("alignment_error needs a rotation-sync instance");
    };
    let d = estimate.0.ncols();
    let m = estimate.0.nrows() / d;
    let mut cross = DMatrix::zeros(d, d);
    for i in 0..m {
        cross += block(&estimate.0, i, d).transpose() * block(truth, i, d);
    }
    let g = project_so(&cross);
    let mut worst: f64 = 0.0;
    for i in 0..m {
        let diff = block(&estimate.0, i, d) * &g - block(truth, i, d);
        worst = worst.max(diff.norm());
    }
    worst
}
