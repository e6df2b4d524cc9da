//! Direct factorizations after a bandwidth-reducing reordering.
//!
//! Symmetric positive definite matrices use an envelope (skyline) Cholesky
//! factorization; general square matrices use a banded LU factorization with
//! partial pivoting. Both are computed once and are immutable afterwards, so a
//! factorization can be shared between threads and reused across time steps.

use crate::error::{Error, Result};

use super::ordering::reverse_cuthill_mckee;
use super::vector::norm2;
use super::SparseMatrix;

/// Envelope Cholesky factor `P M Pᵀ = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    pub fn new(m: &SparseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!("Cholesky of {:?}", m.shape())));
        }
        let n = m.nrows();
        let perm = reverse_cuthill_mckee(m);
        let pm = m.permute_symmetric(&perm);

        let mut first: Vec<usize> = (0..n).collect();
        for (i, j, _) in pm.triplets() {
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            first[r] = first[r].min(c);
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + (i - first[i] + 1));
        }
        let mut data = vec![0.0; start[n]];
        let mut diag = vec![0.0; n];
        for (i, j, v) in pm.triplets() {
            if j <= i {
                data[start[i] + (j - first[i])] = v;
            }
            if i == j {
                diag[i] = v;
            }
        }

        for i in 0..n {
            let fi = first[i];
            let row_i = start[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = data[row_i + (j - fi)];
                if k0 < j {
                    let a = &data[row_i + (k0 - fi)..row_i + (j - fi)];
                    let b = &data[start[j] + (k0 - fj)..start[j] + (j - fj)];
                    s -= a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                }
                if j < i {
                    data[row_i + (j - fi)] = s / data[start[j] + (j - fj)];
                } else {
                    if !(s > diag[i].abs() * 1e-14) || !s.is_finite() {
                        return Err(Error::NotSpd(format!("pivot {s:e} at row {i}")));
                    }
                    data[row_i + (i - fi)] = s.sqrt();
                }
            }
        }
        Ok(Self {
            n,
            perm,
            first,
            start,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn l(&self, i: usize, j: usize) -> f64 {
        self.data[self.start[i] + (j - self.first[i])]
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n, "rhs length");
        let mut y: Vec<f64> = self.perm.iter().map(|&old| rhs[old]).collect();
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i] + (i - fi)];
            let s: f64 = row.iter().zip(&y[fi..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / self.l(i, i);
        }
        for i in (0..self.n).rev() {
            y[i] /= self.l(i, i);
            let xi = y[i];
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i] + (i - fi)];
            for (yk, a) in y[fi..i].iter_mut().zip(row) {
                *yk -= a * xi;
            }
        }
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Banded LU factorization with partial pivoting, `P M Pᵀ` reordered first.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    perm: Vec<usize>,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn new(m: &SparseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!("LU of {:?}", m.shape())));
        }
        let n = m.nrows();
        let perm = reverse_cuthill_mckee(m);
        let pm = m.permute_symmetric(&perm);
        let (kl, ku) = pm.bandwidths();
        let ldab = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            perm,
            kl,
            ku,
            ldab,
            ab: vec![0.0; ldab * n],
            pivots: vec![0; n],
        };
        for (i, j, v) in pm.triplets() {
            *lu.at_mut(i, j) = v;
        }
        let scale = pm.max_abs();
        lu.factor(scale)?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.ab[self.idx(i, j)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.idx(i, j);
        &mut self.ab[k]
    }

    fn factor(&mut self, scale: f64) -> Result<()> {
        let n = self.n;
        let reach = self.kl + self.ku;
        let tiny = scale * f64::EPSILON * (n.max(1) as f64);
        for j in 0..n {
            let km = self.kl.min(n - 1 - j);
            let mut p = j;
            let mut best = self.at(j, j).abs();
            for i in j + 1..=j + km {
                let v = self.at(i, j).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(Error::Singular(format!("pivot {best:e} in column {j}")));
            }
            self.pivots[j] = p;
            let last = (n - 1).min(j + reach);
            if p != j {
                for c in j..=last {
                    let a = self.idx(j, c);
                    let b = self.idx(p, c);
                    self.ab.swap(a, b);
                }
            }
            let piv = self.at(j, j);
            for i in j + 1..=j + km {
                *self.at_mut(i, j) /= piv;
            }
            for c in j + 1..=last {
                let t = self.at(j, c);
                if t != 0.0 {
                    for i in j + 1..=j + km {
                        let lij = self.at(i, j);
                        *self.at_mut(i, c) -= lij * t;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n, "rhs length");
        let n = self.n;
        let reach = self.kl + self.ku;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| rhs[old]).collect();
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                y.swap(j, p);
            }
            let yj = y[j];
            if yj != 0.0 {
                for i in j + 1..=(j + self.kl).min(n - 1) {
                    y[i] -= self.at(i, j) * yj;
                }
            }
        }
        for j in (0..n).rev() {
            y[j] /= self.at(j, j);
            let yj = y[j];
            if yj != 0.0 {
                for i in j.saturating_sub(reach)..j {
                    y[i] -= self.at(i, j) * yj;
                }
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Cholesky(SkylineCholesky),
    Lu(BandLu),
}

/// A factorized matrix together with the matrix itself (for residuals and
/// iterative refinement).
#[derive(Debug, Clone)]
pub struct Factorization {
    matrix: SparseMatrix,
    kind: Kind,
}

impl Factorization {
    pub fn cholesky(m: &SparseMatrix) -> Result<Self> {
        Ok(Self {
            matrix: m.clone(),
            kind: Kind::Cholesky(SkylineCholesky::new(m)?),
        })
    }

    pub fn lu(m: &SparseMatrix) -> Result<Self> {
        Ok(Self {
            matrix: m.clone(),
            kind: Kind::Lu(BandLu::new(m)?),
        })
    }

    /// Cholesky when the matrix turns out SPD, LU otherwise.
    pub fn symmetric_or_lu(m: &SparseMatrix) -> Result<Self> {
        match Self::cholesky(m) {
            Ok(f) => Ok(f),
            Err(Error::NotSpd(_)) => Self::lu(m),
            Err(e) => Err(e),
        }
    }

    pub fn is_cholesky(&self) -> bool {
        matches!(self.kind, Kind::Cholesky(_))
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "rhs of length {} for {}x{} system",
                rhs.len(),
                self.dim(),
                self.dim()
            )));
        }
        Ok(match &self.kind {
            Kind::Cholesky(c) => c.solve(rhs),
            Kind::Lu(l) => l.solve(rhs),
        })
    }

    pub fn relative_residual(&self, x: &[f64], rhs: &[f64]) -> f64 {
        let r = self.residual(x, rhs);
        let nb = norm2(rhs);
        if nb == 0.0 {
            norm2(&r)
        } else {
            norm2(&r) / nb
        }
    }

    fn residual(&self, x: &[f64], rhs: &[f64]) -> Vec<f64> {
        let mut r = rhs.to_vec();
        self.matrix.mul_vec_acc(-1.0, x, &mut r).expect("dimensions checked");
        r
    }

    /// Solve followed by up to `passes` steps of iterative refinement.
    pub fn solve_refined(&self, rhs: &[f64], passes: usize) -> Result<Vec<f64>> {
        let mut x = self.solve(rhs)?;
        let nb = norm2(rhs);
        for _ in 0..passes {
            let r = self.residual(&x, rhs);
            if norm2(&r) <= 1e-14 * nb {
                break;
            }
            let dx = self.solve(&r)?;
            x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
        }
        Ok(x)
    }
}

const RESIDUAL_TOL: f64 = 1e-10;

fn checked_solve(f: &Factorization, rhs: &[f64], fail: fn(String) -> Error) -> Result<Vec<f64>> {
    if rhs.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; rhs.len()]);
    }
    let x = f.solve_refined(rhs, 3)?;
    let res = f.relative_residual(&x, rhs);
    if !(res <= RESIDUAL_TOL) || !x.iter().all(|v| v.is_finite()) {
        return Err(fail(format!("relative residual {res:e} after refinement")));
    }
    Ok(x)
}

/// Solves `M x = rhs` for symmetric positive definite `M`.
pub fn solve_spd(m: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if !m.is_square() || rhs.len() != m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} system with rhs of length {}",
            m.shape(),
            rhs.len()
        )));
    }
    let f = Factorization::cholesky(m)?;
    checked_solve(&f, rhs, Error::NotSpd)
}

/// Solves `M x = rhs` for a general nonsingular square `M`.
pub fn solve_general(m: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if !m.is_square() || rhs.len() != m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} system with rhs of length {}",
            m.shape(),
            rhs.len()
        )));
    }
    let f = Factorization::lu(m)?;
    checked_solve(&f, rhs, Error::Singular)
}
