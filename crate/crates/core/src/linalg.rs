//! Small dense linear-algebra helpers shared across the crate.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Thin QR factorization A = QR with the diagonal of R strictly positive.
///
/// The sign convention makes the factorization unique for full-rank inputs,
/// which in turn makes the Q-factor retraction a function. A zero (or
/// numerically zero) diagonal entry means the input was rank deficient.
pub fn thin_qr_pos(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, p) = a.shape();
    if n < p {
        return Err(Error::InvalidArgument(format!(
            "thin QR expects rows >= cols, got {n}x{p}"
        )));
    }
    let qr = a.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    let scale = a.norm().max(1.0);
    for j in 0..p {
        let d = r[(j, j)];
        if d.abs() <= 1e-14 * scale {
            return Err(Error::DegenerateInput(format!(
                "rank-deficient matrix in QR (diagonal entry {j} is {d:.3e})"
            )));
        }
        if d < 0.0 {
            for i in 0..p {
                r[(j, i)] = -r[(j, i)];
            }
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok((q, r))
}

/// Eigenvalues (ascending) and eigenvectors of a symmetric matrix.
pub fn sym_eig(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = 0.5 * (a + a.transpose());
    let eig = sym.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let values = DVector::from_fn(n, |i, _| eig.eigenvalues[idx[i]]);
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, idx[j])]);
    (values, vectors)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> DVector<f64> {
    sym_eig(a).0
}

/// Singular values of a matrix, descending.
pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    let svd = a.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    DVector::from_vec(sv)
}

/// Smallest singular value of a matrix.
pub fn sigma_min(a: &DMatrix<f64>) -> f64 {
    let sv = singular_values(a);
    sv[sv.len() - 1]
}

/// Least-squares solution of `a x = b` via SVD (minimum-norm when rank deficient).
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    svd.solve(b, 1e-12 * a.norm().max(1.0))
        .expect("SVD solve cannot fail when U and V are requested")
}

/// Frobenius inner product of two same-shape matrices.
pub fn fdot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

/// Least-squares slope of log(y) against log(x), ignoring entries with y below `floor`.
///
/// Returns `None` when fewer than two usable samples remain (e.g. when the
/// residual being measured vanishes to machine precision).
pub fn loglog_slope(xs: &[f64], ys: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys.iter())
        .filter(|(x, y)| **x > 0.0 && **y > floor)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Matrix exponential of a skew-symmetric matrix.
///
/// Closed forms for 1x1/2x2/3x3 (the cases used by the rotation manifolds),
/// scaling-and-squaring with a Taylor core otherwise.
pub fn expm_skew(omega: &DMatrix<f64>) -> DMatrix<f64> {
    let d = omega.nrows();
    assert_eq!(d, omega.ncols(), "expm_skew expects a square matrix");
    match d {
        0 | 1 => DMatrix::identity(d, d),
        2 => {
            let t = omega[(1, 0)];
            DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()])
        }
        3 => {
            // Rodrigues formula.
            let wx = omega[(2, 1)];
            let wy = omega[(0, 2)];
            let wz = omega[(1, 0)];
            let theta = (wx * wx + wy * wy + wz * wz).sqrt();
            let eye = DMatrix::identity(3, 3);
            if theta < 1e-12 {
                return &eye + omega + 0.5 * omega * omega;
            }
            let k = omega / theta;
            &eye + theta.sin() * &k + (1.0 - theta.cos()) * (&k * &k)
        }
        _ => {
            let norm = omega.norm();
            let squarings = (norm.log2().ceil().max(0.0)) as u32 + 2;
            let scaled = omega / 2f64.powi(squarings as i32);
            let mut term = DMatrix::identity(d, d);
            let mut result = DMatrix::identity(d, d);
            for k in 1..=16 {
                term = &term * &scaled / k as f64;
                result += &term;
            }
            for _ in 0..squarings {
                result = &result * &result;
            }
            result
        }
    }
}
