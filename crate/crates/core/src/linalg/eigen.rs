//! Extremal eigenvalues of symmetric matrices and extremal singular values.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

use super::factor::SkylineCholesky;
use super::vector::{dot, norm2};
use super::SparseMatrix;

/// Matrices up to this size are handled by a dense symmetric eigensolve.
pub const DENSE_LIMIT: usize = 500;

const LANCZOS_TOL: f64 = 1e-10;
const MAX_LANCZOS_STEPS: usize = 2000;

fn dense_extremes(m: &SparseMatrix) -> (f64, f64) {
    let n = m.nrows();
    let mut d = DMatrix::from_row_slice(n, n, &m.to_dense());
    // symmetrize to guard against roundoff asymmetry in assembled matrices
    d = (&d + d.transpose()) * 0.5;
    let ev = SymmetricEigen::new(d).eigenvalues;
    let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Sturm count: number of eigenvalues of the tridiagonal `(a, b)` below `x`.
fn sturm_count(a: &[f64], b: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..a.len() {
        let off = if i > 0 { b[i - 1] * b[i - 1] } else { 0.0 };
        d = a[i] - x - if i > 0 { off / d } else { 0.0 };
        if d == 0.0 {
            d = f64::EPSILON * (a[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest eigenvalue of a symmetric tridiagonal matrix by bisection.
fn tridiag_max(a: &[f64], b: &[f64]) -> f64 {
    let m = a.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = if i > 0 { b[i - 1].abs() } else { 0.0 } + if i + 1 < m { b[i].abs() } else { 0.0 };
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(a, b, mid) == m {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// |last component| of the unit eigenvector of `(a, b)` for its largest
/// eigenvalue `theta`, by inverse iteration just above `theta` (where the
/// shifted matrix is negative definite and needs no pivoting).
fn last_component(a: &[f64], b: &[f64], theta: f64) -> f64 {
    let m = a.len();
    let s = theta + 1e-12 * theta.abs().max(1e-300);
    let mut x = vec![1.0; m];
    for _ in 0..3 {
        // LDLᵀ of T - sI
        let mut d = vec![0.0; m];
        let mut l = vec![0.0; m];
        for i in 0..m {
            d[i] = a[i] - s - if i > 0 { l[i - 1] * b[i - 1] } else { 0.0 };
            if i + 1 < m {
                l[i] = b[i] / d[i];
            }
        }
        for i in 1..m {
            x[i] -= l[i - 1] * x[i - 1];
        }
        for i in 0..m {
            x[i] /= d[i];
        }
        for i in (0..m - 1).rev() {
            x[i] -= l[i] * x[i + 1];
        }
        let nx = norm2(&x);
        if !nx.is_finite() || nx == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= nx);
    }
    x[m - 1].abs()
}

/// Largest eigenvalue of the symmetric operator `op`, by Lanczos with full
/// reorthogonalization. Stops on a small Ritz residual or an exhausted
/// Krylov space.
fn lanczos_max(n: usize, op: &dyn Fn(&[f64]) -> Vec<f64>) -> f64 {
    // deterministic, not axis aligned start vector
    let mut q: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_7).sin()).collect();
    let nq = norm2(&q);
    q.iter_mut().for_each(|v| *v /= nq);

    let steps = n.min(MAX_LANCZOS_STEPS);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut theta = f64::NEG_INFINITY;
    basis.push(q);
    for k in 0..steps {
        let mut w = op(&basis[k]);
        alpha.push(dot(&w, &basis[k]));
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let bnorm = norm2(&w);
        let last = k + 1 == steps || bnorm <= 1e-14 * alpha.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if last || k % 5 == 4 {
            theta = tridiag_max(&alpha, &beta);
            let resid = bnorm * last_component(&alpha, &beta, theta);
            if last || resid <= LANCZOS_TOL * theta.abs() {
                break;
            }
        }
        beta.push(bnorm);
        basis.push(w.iter().map(|v| v / bnorm).collect());
    }
    theta
}

fn sparse_extremes(m: &SparseMatrix) -> (f64, f64) {
    let n = m.nrows();
    let hi = lanczos_max(n, &|x| m.mul_vec(x).expect("square"));
    let lo = match SkylineCholesky::new(m) {
        // shift-invert: the largest eigenvalue of M⁻¹ is 1/λ_min
        Ok(chol) => 1.0 / lanczos_max(n, &|x| chol.solve(x)),
        Err(_) => -lanczos_max(n, &|x| m.mul_vec(x).expect("square").iter().map(|v| -v).collect()),
    };
    (lo, hi)
}

/// `(λ_min, λ_max)` of a symmetric matrix.
pub fn extremal_eigenvalues(m: &SparseMatrix) -> Result<(f64, f64)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("eigenvalues of {:?}", m.shape())));
    }
    if m.nrows() == 0 {
        return Err(Error::DimensionMismatch("eigenvalues of an empty matrix".into()));
    }
    Ok(if m.nrows() <= DENSE_LIMIT {
        dense_extremes(m)
    } else {
        sparse_extremes(m)
    })
}

/// `(σ_min, σ_max)` over the `min(rows, cols)` singular values of `m`.
///
/// Works on the smaller Gram matrix, so a wide matrix reports the
/// inf-sup type constant `σ_min = √λ_min(M Mᵀ)`.
pub fn extremal_singular_values(m: &SparseMatrix) -> Result<(f64, f64)> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Err(Error::DimensionMismatch(format!("singular values of {:?}", m.shape())));
    }
    let t = m.transpose();
    let gram = if r <= c { m.matmul(&t)? } else { t.matmul(m)? };
    let (lo, hi) = extremal_eigenvalues(&gram)?;
    Ok((lo.max(0.0).sqrt(), hi.max(0.0).sqrt()))
}
