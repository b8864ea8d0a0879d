//! Riemannian optimization with adaptive cubic regularization.
//!
//! The crate provides:
//!
//! - [`manifolds`]: matrix manifolds (Euclidean, sphere, Stiefel, Grassmann,
//!   oblique, rotations, affine subspaces, products) with retractions and
//!   differentiated retractions.
//! - [`model`]: the cubic-regularized second-order model on a tangent space.
//! - [`subsolver`]: Lanczos and nonlinear-CG solvers for the cubic subproblem.
//! - [`arc`]: the adaptive-regularization outer loop with a full audit trace.
//! - [`baselines`]: Riemannian trust-region and gradient-descent reference solvers.
//! - [`problems`]: six benchmark problem generators with oracles.
//! - [`verify`]: runtime checks for the inequalities the solver is supposed to
//!   satisfy (descent, sum-of-cubes, regularization caps, retraction bounds).
//! - [`cli`]: the configuration-driven benchmark runner behind the `arcbench` binary.

pub mod arc;
pub mod baselines;
pub mod cli;
pub mod linalg;
pub mod manifolds;
pub mod model;
pub mod problems;
pub mod subsolver;
pub mod trace;
pub mod verify;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("no convergence: {msg} (bracket [{lo}, {hi}])")]
    Convergence { msg: String, lo: f64, hi: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use manifolds::{Manifold, Point, Tangent};
pub use model::CubicModel;
pub use trace::{IterationRecord, Termination, Trace};
