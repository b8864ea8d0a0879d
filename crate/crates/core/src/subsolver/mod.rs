//! Approximate minimization of the cubic model, targeting the progress
//! conditions `m(s) <= m(0)` and `||grad m(s)|| <= theta ||s||^2`.
//!
//! Two solvers are provided: a Lanczos method that minimizes the model over
//! growing Krylov subspaces (with the restricted problem solved globally via
//! a secular equation), and a nonnegative-Polak-Ribiere nonlinear CG run
//! directly on the model.

mod lanczos;
mod nlcg;
mod secular;

pub use lanczos::{solve_lanczos, LanczosState};
pub use nlcg::solve_nlcg;
pub use secular::{min_restricted_cubic, tridiagonal, RestrictedCubic};

use crate::manifolds::Tangent;
use crate::model::CubicModel;
use crate::Result;

/// Why the subsolver returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `||grad m(s)|| <= theta ||s||^2` was met.
    FirstOrderMet,
    /// The Krylov space reached the full tangent dimension.
    FullDimension,
    /// Iteration budget exhausted; the best iterate is returned as a trial step.
    MaxInner,
    /// The model gradient at the origin is zero; the zero step is returned.
    ZeroGradient,
}

/// Outcome of a subproblem solve.
#[derive(Debug, Clone)]
pub struct SubproblemResult {
    /// Trial step in the tangent space.
    pub step: Tangent,
    /// `m(step)`.
    pub model_value: f64,
    /// `||grad m(step)||`.
    pub grad_norm: f64,
    /// Inner iterations performed.
    pub inner_iters: usize,
    /// Hessian-vector products issued during this solve.
    pub hessvec_count: u64,
    pub reason: StopReason,
}

/// Second-order progress test: `lambda_min(grad^2 m(s)) >= -theta ||s||`,
/// with a 1e-10 slack on the closed inequality.
pub fn check_second_order(model: &CubicModel<'_>, s: &Tangent, theta: f64) -> Result<bool> {
    let lam = model.hess_smallest_eig(s, 1e-10)?;
    Ok(lam >= -theta * model.norm(s) - 1e-10)
}
