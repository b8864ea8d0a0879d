//! Max-cut relaxation on the oblique manifold (the Burer-Monteiro low-rank
//! factorization of the semidefinite relaxation):
//! minimize `tr(X^T A X)/2` over OB(n, p), rows of X on the unit sphere.
//! The factorization rank defaults to `ceil(sqrt(2 n))`.

use std::sync::Arc;

use super::{GroundTruth, GsetGraph, Instance, Problem};
use crate::linalg::fdot;
use crate::manifolds::{Oblique, Point, Tangent};

/// Default factorization rank for an n-node graph.
pub fn default_rank(n: usize) -> usize {
    ((2.0 * n as f64).sqrt().ceil() as usize).max(2)
}

pub fn make_maxcut(graph: &GsetGraph, p: usize) -> Instance {
    assert!(p >= 2, "oblique rank must be at least 2");
    let a = Arc::new(graph.adjacency());
    let n = graph.n;

    let (a1, a2, a3) = (a.clone(), a.clone(), a);
    let problem = Problem::new(
        "maxcut",
        move |x: &Point| 0.5 * fdot(&x.0, &(&*a1 * &x.0)),
        move |x: &Point| &*a2 * &x.0,
        move |_x: &Point, s: &Tangent| &*a3 * &s.0,
        // tr(X^T A X)/2 >= -||A||_* /2 is loose; the simple certified bound
        // is minus half the sum of absolute weights times... left unset.
        None,
    );

    Instance {
        manifold: Box::new(Oblique::new(n, p)),
        problem,
        truth: GroundTruth::None,
        x0: None,
    }
}

/// Erdos-Renyi unit-weight graph, retried until it has at least one edge.
pub fn random_graph(n: usize, edge_prob: f64, rng: &mut dyn rand::RngCore) -> GsetGraph {
    use rand::Rng;
    loop {
        let mut edges = Vec::new();
        for i in 1..=n {
            for j in (i + 1)..=n {
                if rng.gen_bool(edge_prob) {
                    edges.push((i, j, 1.0));
                }
            }
        }
        if !edges.is_empty() {
            return GsetGraph { n, edges };
        }
    }
}
