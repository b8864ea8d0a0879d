//! Truncated SVD: minimize `-tr(U^T A V N)` over St(m,p) x St(n,p) with
//! `N = diag(p, p-1, ..., 1)`. The optimum is minus the N-weighted sum of the
//! p largest singular values of A.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{GroundTruth, Instance, Problem};
use crate::linalg::{fdot, singular_values};
use crate::manifolds::{gaussian_matrix, Point, ProductManifold, Stiefel, Tangent};

/// The weight matrix diag(p, p-1, ..., 1).
pub(crate) fn weight_matrix(p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| if i == j { (p - i) as f64 } else { 0.0 })
}

pub fn make_truncated_svd(m: usize, n: usize, p: usize, rng: &mut dyn rand::RngCore) -> Instance {
    assert!(p >= 1 && p <= m.min(n), "need 1 <= p <= min(m, n)");
    let a = Arc::new(gaussian_matrix(m, n, rng));
    let nw = Arc::new(weight_matrix(p));

    let sv = singular_values(&a);
    let optimal: f64 = -(0..p).map(|i| (p - i) as f64 * sv[i]).sum::<f64>();

    let manifold = ProductManifold::new(vec![
        Box::new(Stiefel::new(m, p)),
        Box::new(Stiefel::new(n, p)),
    ]);

    let split = move |data: &DMatrix<f64>| -> (DMatrix<f64>, DMatrix<f64>) {
        let u = DMatrix::from_column_slice(m, p, &data.as_slice()[..m * p]);
        let v = DMatrix::from_column_slice(n, p, &data.as_slice()[m * p..]);
        (u, v)
    };
    let join = move |u: &DMatrix<f64>, v: &DMatrix<f64>| -> DMatrix<f64> {
        let mut out = DMatrix::zeros(m * p + n * p, 1);
        out.as_mut_slice()[..m * p].copy_from_slice(u.as_slice());
        out.as_mut_slice()[m * p..].copy_from_slice(v.as_slice());
        out
    };

    let (a1, n1) = (a.clone(), nw.clone());
    let (a2, n2) = (a.clone(), nw.clone());
    let (a3, n3) = (a, nw);
    let problem = Problem::new(
        "truncated-svd",
        move |x: &Point| {
            let (u, v) = split(&x.0);
            -fdot(&u, &(&*a1 * &v * &*n1))
        },
        move |x: &Point| {
            let (u, v) = split(&x.0);
            let gu = -(&*a2 * &v * &*n2);
            let gv = -(a2.transpose() * &u * &*n2);
            join(&gu, &gv)
        },
        move |_x: &Point, s: &Tangent| {
            // The cost is bilinear in (U, V): the Hessian swaps the blocks.
            let (du, dv) = split(&s.0);
            let hu = -(&*a3 * &dv * &*n3);
            let hv = -(a3.transpose() * &du * &*n3);
            join(&hu, &hv)
        },
        Some(optimal),
    );

    Instance {
        manifold: Box::new(manifold),
        problem,
        truth: GroundTruth::OptimalCost(optimal),
        x0: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::Manifold;
    use crate::problems::validate::check_problem;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn weight_matrix_example() {
        let n = weight_matrix(3);
        assert_eq!(n[(0, 0)], 3.0);
        assert_eq!(n[(1, 1)], 2.0);
        assert_eq!(n[(2, 2)], 1.0);
        assert_eq!(n[(0, 1)], 0.0);
    }

    #[test]
    fn derivative_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let inst = make_truncated_svd(8, 6, 2, &mut rng);
        check_problem(&inst, &mut rng, 10);
    }

    #[test]
    fn optimal_cost_matches_svd_oracle_at_singular_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let (m, n, p) = (7, 5, 2);
        let inst = make_truncated_svd(m, n, p, &mut rng);
        // Recover A from the gradient callback at (U, V) = (e-basis, 0):
        // simpler: egrad of the U block at V = I-padded gives -A V N; instead
        // rebuild A column-wise through ehessvec which is linear.
        let mut a = DMatrix::zeros(m, n);
        for j in 0..n {
            let mut s = DMatrix::zeros(m * p + n * p, 1);
            s[(m * p + j, 0)] = 1.0; // dV = e_j e_1^T, first column
            let h = inst.problem.ehessvec(&Point(DMatrix::zeros(m * p + n * p, 1)), &Tangent(s));
            // hu = -A dV N: first column is -p * A e_j.
            for i in 0..m {
                a[(i, j)] = -h[(i, 0)] / p as f64;
            }
        }
        let svd = a.clone().svd(true, true);
        let u_full = svd.u.unwrap();
        let vt = svd.v_t.unwrap();
        let mut sv: Vec<(f64, usize)> = svd
            .singular_values
            .iter()
            .copied()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        sv.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
        let mut u = DMatrix::zeros(m, p);
        let mut v = DMatrix::zeros(n, p);
        for k in 0..p {
            let idx = sv[k].1;
            u.set_column(k, &u_full.column(idx).into_owned());
            v.set_column(k, &vt.row(idx).transpose());
        }
        let mut x = DMatrix::zeros(m * p + n * p, 1);
        x.as_mut_slice()[..m * p].copy_from_slice(u.as_slice());
        x.as_mut_slice()[m * p..].copy_from_slice(v.as_slice());
        let cost = inst.problem.cost(&Point(x));
        if let GroundTruth::OptimalCost(c) = inst.truth {
            assert_relative_eq!(cost, c, epsilon = 1e-9);
        } else {
            panic!("expected optimal cost");
        }
    }

    #[test]
    fn swap_symmetry() {
        // cost(U, V; A) == cost(V, U; A^T).
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let (m, n, p) = (6, 4, 2);
        let inst = make_truncated_svd(m, n, p, &mut rng);
        let mut rng2 = ChaCha8Rng::seed_from_u64(34);
        let u = Stiefel::new(m, p).rand_point(&mut rng2);
        let v = Stiefel::new(n, p).rand_point(&mut rng2);
        let mut x = DMatrix::zeros(m * p + n * p, 1);
        x.as_mut_slice()[..m * p].copy_from_slice(u.0.as_slice());
        x.as_mut_slice()[m * p..].copy_from_slice(v.0.as_slice());
        let c1 = inst.problem.cost(&Point(x));

        // tr(U^T A V N) = tr(V^T A^T U N): evaluate by hand from the gradient
        // callback (egrad_V = -A^T U N).
        let mut xu = DMatrix::zeros(m * p + n * p, 1);
        xu.as_mut_slice()[..m * p].copy_from_slice(u.0.as_slice());
        xu.as_mut_slice()[m * p..].copy_from_slice(v.0.as_slice());
        let eg = inst.problem.egrad(&Point(xu));
        let gv = DMatrix::from_column_slice(n, p, &eg.as_slice()[m * p..]);
        let c2 = fdot(&v.0, &gv); // <V, -A^T U N> = -tr(V^T A^T U N)
        assert_relative_eq!(c1, c2, epsilon = 1e-10);
    }
}
