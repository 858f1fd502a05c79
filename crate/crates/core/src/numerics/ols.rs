//! Least squares via Householder QR.

use super::Matrix;
use crate::error::{shape_err, Error, Result};

/// Relative threshold on |R_kk| below which the design counts as singular.
const RANK_TOL: f64 = 1e-10;

/// Solves `min ‖XW − y‖² + ridge·‖W‖²` for `W` (p×q).
///
/// The ridge term is handled by appending `sqrt(ridge)·I` rows to `X`, so the
/// factorisation never forms `XᵀX`. With `ridge == 0` a rank-deficient design
/// returns [`Error::SingularDesign`].
pub fn ols_fit(x: &Matrix, y: &Matrix, ridge: f64) -> Result<Matrix> {
    let (n, p) = x.shape();
    let q = y.cols();
    if p == 0 {
        return Err(shape_err("ols_fit", "at least one column", 0));
    }
    if y.rows() != n {
        return Err(shape_err("ols_fit rows", n, y.rows()));
    }
    if !(ridge >= 0.0) {
        return Err(Error::Config(format!("ridge must be >= 0, got {ridge}")));
    }
    let m = if ridge > 0.0 { n + p } else { n };
    if m < p {
        return Err(Error::SingularDesign { column: m });
    }

    // Column-major working copies.
    let mut a = vec![0.0; m * p];
    let mut b = vec![0.0; m * q];
    for i in 0..n {
        for j in 0..p {
            a[j * m + i] = x[(i, j)];
        }
        for j in 0..q {
            b[j * m + i] = y[(i, j)];
        }
    }
    if ridge > 0.0 {
        let s = ridge.sqrt();
        for j in 0..p {
            a[j * m + n + j] = s;
        }
    }

    let col_norm_max = (0..p)
        .map(|j| a[j * m..(j + 1) * m].iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    if col_norm_max == 0.0 {
        return Err(Error::SingularDesign { column: 0 });
    }

    let mut diag = vec![0.0; p];
    for k in 0..p {
        let col = &a[k * m..(k + 1) * m];
        let norm = col[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= RANK_TOL * col_norm_max {
            return Err(Error::SingularDesign { column: k });
        }
        let alpha = if col[k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = col[k..].to_vec();
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        diag[k] = alpha;
        if vnorm_sq == 0.0 {
            continue;
        }
        for j in k..p {
            let cj = &mut a[j * m + k..(j + 1) * m];
            let proj = 2.0 * v.iter().zip(cj.iter()).map(|(a, b)| a * b).sum::<f64>() / vnorm_sq;
            for (c, vi) in cj.iter_mut().zip(&v) {
                *c -= proj * vi;
            }
        }
        for j in 0..q {
            let bj = &mut b[j * m + k..(j + 1) * m];
            let proj = 2.0 * v.iter().zip(bj.iter()).map(|(a, b)| a * b).sum::<f64>() / vnorm_sq;
            for (c, vi) in bj.iter_mut().zip(&v) {
                *c -= proj * vi;
            }
        }
    }
    let diag_max = diag.iter().fold(0.0_f64, |acc, d| acc.max(d.abs()));
    for (k, d) in diag.iter().enumerate() {
        if d.abs() <= RANK_TOL * diag_max {
            return Err(Error::SingularDesign { column: k });
        }
    }

    // Back substitution R W = Qᵀ y.
    let mut w = Matrix::zeros(p, q);
    for j in 0..q {
        for k in (0..p).rev() {
            let mut s = b[j * m + k];
            for l in k + 1..p {
                s -= a[l * m + k] * w[(l, j)];
            }
            w[(k, j)] = s / diag[k];
        }
    }
    if !w.is_finite() {
        return Err(Error::SingularDesign { column: 0 });
    }
    Ok(w)
}

/// [`ols_fit`] with the singular-design fallback: on failure, retries with
/// `ridge = 1e-8·trace(XᵀX)/p`.
pub fn ols_fit_with_fallback(x: &Matrix, y: &Matrix) -> Result<Matrix> {
    match ols_fit(x, y, 0.0) {
        Err(Error::SingularDesign { .. }) => {
            let p = x.cols() as f64;
            let trace = x.norm_sq();
            let ridge = if trace > 0.0 { 1e-8 * trace / p } else { 1e-8 };
            log::debug!("singular OLS design, retrying with ridge {ridge:e}");
            ols_fit(x, y, ridge)
        }
        other => other,
    }
}
