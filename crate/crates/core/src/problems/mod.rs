//! Benchmark problem generators.
//!
//! Each generator returns an [`Instance`]: a manifold, a [`Problem`] (cost,
//! Euclidean gradient and Hessian-vector callbacks), and whatever ground
//! truth the construction makes available for oracle checks.

mod gset;
mod invariant_subspace;
mod matrix_completion;
mod maxcut;
mod rotation_sync;
mod shapefit;
mod truncated_svd;

pub use gset::{read_gset, write_gset, GsetGraph};
pub use invariant_subspace::make_invariant_subspace;
pub use matrix_completion::{held_out_rmse, make_matrix_completion};
pub use maxcut::{default_rank, make_maxcut, random_graph};
pub use rotation_sync::{alignment_error, make_rotation_sync};
pub use shapefit::{make_shapefit, solve_shapefit_direct};
pub use truncated_svd::make_truncated_svd;

use nalgebra::DMatrix;

use crate::manifolds::{Manifold, Point, Tangent};

type CostFn = Box<dyn Fn(&Point) -> f64 + Send + Sync>;
type EgradFn = Box<dyn Fn(&Point) -> DMatrix<f64> + Send + Sync>;
type EhessFn = Box<dyn Fn(&Point, &Tangent) -> DMatrix<f64> + Send + Sync>;

/// A cost with its ambient derivatives, bound to a manifold by the caller.
pub struct Problem {
    pub name: String,
    cost: CostFn,
    egrad: EgradFn,
    ehessvec: EhessFn,
    /// A known lower bound on the cost, when the construction provides one.
    pub f_low: Option<f64>,
}

impl Problem {
    pub fn new(
        name: &str,
        cost: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        egrad: impl Fn(&Point) -> DMatrix<f64> + Send + Sync + 'static,
        ehessvec: impl Fn(&Point, &Tangent) -> DMatrix<f64> + Send + Sync + 'static,
        f_low: Option<f64>,
    ) -> Self {
        Problem {
            name: name.to_string(),
            cost: Box::new(cost),
            egrad: Box::new(egrad),
            ehessvec: Box::new(ehessvec),
            f_low,
        }
    }

    pub fn cost(&self, x: &Point) -> f64 {
        (self.cost)(x)
    }

    pub fn egrad(&self, x: &Point) -> DMatrix<f64> {
        (self.egrad)(x)
    }

    pub fn ehessvec(&self, x: &Point, s: &Tangent) -> DMatrix<f64> {
        (self.ehessvec)(x, s)
    }
}

/// Problem-specific data for oracle checks.
pub enum GroundTruth {
    None,
    /// Known optimal cost value.
    OptimalCost(f64),
    /// Matrix completion: the full target matrix and the observed mask.
    Completion {
        target: DMatrix<f64>,
        observed: Vec<(usize, usize)>,
    },
    /// Rotation synchronization: the true stacked rotations.
    Rotations(DMatrix<f64>),
    /// ShapeFit: the true, constraint-normalized configuration.
    Points(DMatrix<f64>),
}

/// A generated benchmark instance.
pub struct Instance {
    pub manifold: Box<dyn Manifold>,
    pub problem: Problem,
    pub truth: GroundTruth,
    /// Deterministic initial guess, for problems that specify one
    /// (rotation synchronization's spectral initializer). `None` means
    /// "start anywhere random".
    pub x0: Option<Point>,
}


#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn taylor_regularity_across_generators() {
        // Third-order remainder slope in [2.7, 3.3] (or exactly quadratic)
        // on small instances of every generator.
        let mut rng = ChaCha8Rng::seed_from_u64(120);
        let instances: Vec<Instance> = vec![
            make_invariant_subspace(10, 2, &mut rng),
            make_truncated_svd(8, 6, 2, &mut rng),
            make_matrix_completion(12, 10, 2, 3.0, &mut rng).unwrap(),
            make_maxcut(&maxcut::random_graph(10, 0.5, &mut rng), 3),
            make_rotation_sync(5, 3, 0.7, 0.0, &mut rng).unwrap(),
            make_shapefit(8, 3, 0.6, &mut rng).unwrap(),
        ];
        for inst in &instances {
            match validate::taylor_slope(inst, &mut rng) {
                None => {} // exact quadratic pullback (the affine problem)
                Some(slope) => assert!(
                    (2.7..=3.3).contains(&slope),
                    "{}: Taylor slope {slope}",
                    inst.problem.name
                ),
            }
        }
    }
}
