//! Dominant invariant subspace: minimize `-tr(X^T A X)/2` over Gr(n, p) with
//! a random symmetric A. Optima span the top-p eigenspace of A, so the best
//! cost is minus half the sum of the p largest eigenvalues.

use std::sync::Arc;

use super::{GroundTruth, Instance, Problem};
use crate::linalg::{fdot, sym_eigenvalues};
use crate::manifolds::{gaussian_matrix, Grassmann, Point, Tangent};

pub fn make_invariant_subspace(n: usize, p: usize, rng: &mut dyn rand::RngCore) -> Instance {
    assert!(p >= 1 && p < n, "need 1 <= p < n");
    let g = gaussian_matrix(n, n, rng);
    let a = Arc::new(0.5 * (&g + g.transpose()));

    let evals = sym_eigenvalues(&a);
    let optimal: f64 = -0.5 * (0..p).map(|i| evals[n - 1 - i]).sum::<f64>();

    let (a1, a2, a3) = (a.clone(), a.clone(), a);
    let problem = Problem::new(
        "invariant-subspace",
        move |x: &Point| -0.5 * fdot(&x.0, &(&*a1 * &x.0)),
        move |x: &Point| -(&*a2 * &x.0),
        move |_x: &Point, s: &Tangent| -(&*a3 * &s.0),
        Some(optimal),
    );

    Instance {
        manifold: Box::new(Grassmann::new(n, p)),
        problem,
        truth: GroundTruth::OptimalCost(optimal),
        x0: None,
    }
}
