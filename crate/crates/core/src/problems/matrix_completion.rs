//! Low-rank matrix completion on one Grassmann manifold: the column space
//! U of the rank-r target is the variable, the coefficient matrix W is
//! eliminated column-wise by least squares on the observed entries.
//!
//! `cost(U) = ||P_Omega(U W_U - A)||_F^2 / 2` with `W_U` the per-column
//! least-squares minimizer. The gradient treats `W_U` as fixed (the partial
//! derivative in W vanishes at the minimizer); the Hessian-vector product is
//! a central finite difference of the gradient, which suffices for the
//! regularized outer loop at these scales.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{GroundTruth, Instance, Problem};
use crate::linalg::lstsq;
use crate::manifolds::{gaussian_matrix, Grassmann, Point, Tangent};
use crate::{Error, Result};

struct CompletionData {
    /// Observed entries per column, as row indices.
    rows_by_col: Vec<Vec<usize>>,
    /// Observed values per column, aligned with `rows_by_col`.
    vals_by_col: Vec<Vec<f64>>,
    m: usize,
    r: usize,
}

impl CompletionData {
    /// Per-column least-squares coefficients and the observed residual.
    /// Returns (W, residual-by-column) with the residual supported on Omega.
    fn solve_w(&self, u: &DMatrix<f64>) -> (DMatrix<f64>, Vec<Vec<f64>>) {
        let n = self.rows_by_col.len();
        let mut w = DMatrix::zeros(self.r, n);
        let mut resid = Vec::with_capacity(n);
        for j in 0..n {
            let rows = &self.rows_by_col[j];
            let mut uj = DMatrix::zeros(rows.len(), self.r);
            for (k, &i) in rows.iter().enumerate() {
                for c in 0..self.r {
                    uj[(k, c)] = u[(i, c)];
                }
            }
            let b = DVector::from_vec(self.vals_by_col[j].clone());
            let wj = lstsq(&uj, &b);
            let rj = &uj * &wj - &b;
            for c in 0..self.r {
                w[(c, j)] = wj[c];
            }
            resid.push(rj.iter().copied().collect());
        }
        (w, resid)
    }

    fn cost(&self, u: &DMatrix<f64>) -> f64 {
        let (_, resid) = self.solve_w(u);
        0.5 * resid
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v * v)
            .sum::<f64>()
    }

    /// Euclidean gradient: `R W^T` with `R = P_Omega(U W - A)`.
    fn egrad(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let (w, resid) = self.solve_w(u);
        let mut g = DMatrix::zeros(self.m, self.r);
        for (j, rows) in self.rows_by_col.iter().enumerate() {
            for (k, &i) in rows.iter().enumerate() {
                let rv = resid[j][k];
                for c in 0..self.r {
                    g[(i, c)] += rv * w[(c, j)];
                }
            }
        }
        g
    }
}

/// Sample an observation mask of the requested size; every column must see at
/// least r entries (retries up to 10 times, then errors).
fn sample_mask(
    m: usize,
    n: usize,
    r: usize,
    k: usize,
    rng: &mut dyn rand::RngCore,
) -> Result<Vec<(usize, usize)>> {
    use rand::seq::SliceRandom;
    for _ in 0..10 {
        let mut cells: Vec<(usize, usize)> = (0..m * n).map(|t| (t % m, t / m)).collect();
        cells.shuffle(rng);
        cells.truncate(k);
        let mut per_col = vec![0usize; n];
        for &(_, j) in &cells {
            per_col[j] += 1;
        }
        if per_col.iter().all(|&c| c >= r) {
            cells.sort();
            return Ok(cells);
        }
    }
    Err(Error::InvalidArgument(format!(
        "could not sample a mask with >= {r} observations per column after 10 tries"
    )))
}

pub fn make_matrix_completion(
    m: usize,
    n: usize,
    r: usize,
    osf: f64,
    rng: &mut dyn rand::RngCore,
) -> Result<Instance> {
    let dof = r * (m + n - r);
    let k = ((osf * dof as f64).round() as usize).min(m * n);
    if k > m * n {
        return Err(Error::InvalidArgument(
            "oversampling exceeds the number of entries".into(),
        ));
    }
    let left = gaussian_matrix(m, r, rng);
    let right = gaussian_matrix(n, r, rng);
    let target = &left * right.transpose();
    let observed = sample_mask(m, n, r, k, rng)?;

    let mut rows_by_col = vec![Vec::new(); n];
    let mut vals_by_col = vec![Vec::new(); n];
    for &(i, j) in &observed {
        rows_by_col[j].push(i);
        vals_by_col[j].push(target[(i, j)]);
    }
    let data = Arc::new(CompletionData {
        rows_by_col,
        vals_by_col,
        m,
        r,
    });

    let (d1, d2, d3) = (data.clone(), data.clone(), data);
    let problem = Problem::new(
        "matrix-completion",
        move |x: &Point| d1.cost(&x.0),
        move |x: &Point| d2.egrad(&x.0),
        move |x: &Point, s: &Tangent| {
            // Central finite difference of the gradient; the direction is
            // normalized so the stencil width is scale-free.
            let ns = s.0.norm();
            if ns == 0.0 {
                return DMatrix::zeros(x.0.nrows(), x.0.ncols());
            }
            let h = 1e-7;
            let unit = &s.0 / ns;
            let gp = d3.egrad(&(&x.0 + h * &unit));
            let gm = d3.egrad(&(&x.0 - h * &unit));
            (gp - gm) * (ns / (2.0 * h))
        },
        Some(0.0),
    );

    Ok(Instance {
        manifold: Box::new(Grassmann::new(m, r)),
        problem,
        truth: GroundTruth::Completion { target, observed },
        x0: None,
    })
}

/// Root-mean-square error over the entries *not* observed, with the
/// coefficient matrix re-fitted on the observed ones.
pub fn held_out_rmse(inst: &Instance, u: &Point) -> f64 {
    let GroundTruth::Completion { target, observed } = &inst.truth else {
        panic!("held_out_rmse needs a completion instance");
    };
    let (m, n) = target.shape();
    let r = u.0.ncols();
    let mut rows_by_col = vec![Vec::new(); n];
    let mut vals_by_col = vec![Vec::new(); n];
    for &(i, j) in observed {
        rows_by_col[j].push(i);
        vals_by_col[j].push(target[(i, j)]);
    }
    let data = CompletionData {
        rows_by_col,
        vals_by_col,
        m,
        r,
    };
    let (w, _) = data.solve_w(&u.0);
    let full = &u.0 * &w;
    let mask: std::collections::HashSet<(usize, usize)> = observed.iter().copied().collect();
    let mut sum = 0.0;
    let mut count = 0usize;
    for j in 0..n {
        for i in 0..m {
            if !mask.contains(&(i, j)) {
                sum += (full[(i, j)] - target[(i, j)]).powi(2);
                count += 1;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}
