use crate::error::{Error, Result};

/// Real matrix in compressed sparse row storage.
///
/// Column indices are sorted within each row and duplicates are summed on
/// construction. Dense matrices are represented with every entry stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::DimensionMismatch(format!(
                    "triplet ({i}, {j}) outside {nrows}x{ncols}"
                )));
            }
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(i, j, v) in triplets {
            let slot = next[i];
            cols[slot] = j;
            vals[slot] = v;
            next[i] += 1;
        }

        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == j {
                    sum += row[k].1;
                    k += 1;
                }
                indices.push(j);
                values.push(sum);
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Row-major dense input; every entry (including zeros) is stored.
    pub fn from_dense(nrows: usize, ncols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::DimensionMismatch(format!(
                "dense data of length {} for {nrows}x{ncols}",
                data.len()
            )));
        }
        Ok(Self {
            nrows,
            ncols,
            indptr: (0..=nrows).map(|i| i * ncols).collect(),
            indices: (0..nrows).flat_map(|_| 0..ncols).collect(),
            values: data.to_vec(),
        })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::from_dense(nrows, ncols, &data)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[range.clone()], &self.values[range])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.ncols || y.len() != self.nrows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix times vector of length {} into {}",
                self.nrows,
                self.ncols,
                x.len(),
                y.len()
            )));
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
        Ok(())
    }

    /// `y += alpha * self * x`
    pub fn mul_vec_acc(&self, alpha: f64, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.ncols || y.len() != self.nrows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix times vector of length {} into {}",
                self.nrows,
                self.ncols,
                x.len(),
                y.len()
            )));
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let s: f64 = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
            *yi += alpha * s;
        }
        Ok(())
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                indices[next[j]] = i;
                values[next[j]] = v;
                next[j] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            values,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// `a * self + b * other`
    pub fn lin_comb(a: f64, lhs: &Self, b: f64, rhs: &Self) -> Result<Self> {
        if lhs.shape() != rhs.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                lhs.shape(),
                rhs.shape()
            )));
        }
        let trip: Vec<_> = lhs
            .triplets()
            .map(|(i, j, v)| (i, j, a * v))
            .chain(rhs.triplets().map(|(i, j, v)| (i, j, b * v)))
            .collect();
        Self::from_triplets(lhs.nrows, lhs.ncols, &trip)
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch(format!(
                "{:?} times {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut pattern = Vec::new();
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.nrows {
            pattern.clear();
            let (cols, vals) = self.row(i);
            for (&k, &a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(k);
                for (&j, &b) in ocols.iter().zip(ovals) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        pattern.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            pattern.sort_unstable();
            for &j in &pattern {
                indices.push(j);
                values.push(acc[j]);
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Restriction to the given rows and columns (in the given order).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut trip = Vec::new();
        for (new_i, &old_i) in rows.iter().enumerate() {
            let (c, v) = self.row(old_i);
            for (&j, &val) in c.iter().zip(v) {
                if col_map[j] != usize::MAX {
                    trip.push((new_i, col_map[j], val));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), &trip).expect("indices in range")
    }

    /// Assembles a block matrix; `None` blocks are zero. Block row heights and
    /// column widths are taken from `row_sizes` and `col_sizes`.
    pub fn block(
        row_sizes: &[usize],
        col_sizes: &[usize],
        blocks: &[Vec<Option<&SparseMatrix>>],
    ) -> Result<Self> {
        if blocks.len() != row_sizes.len() || blocks.iter().any(|r| r.len() != col_sizes.len()) {
            return Err(Error::DimensionMismatch("block layout".into()));
        }
        let row_off: Vec<usize> = offsets(row_sizes);
        let col_off: Vec<usize> = offsets(col_sizes);
        let mut trip = Vec::new();
        for (bi, brow) in blocks.iter().enumerate() {
            for (bj, blk) in brow.iter().enumerate() {
                if let Some(m) = blk {
                    if m.shape() != (row_sizes[bi], col_sizes[bj]) {
                        return Err(Error::DimensionMismatch(format!(
                            "block ({bi}, {bj}) has shape {:?}, expected {:?}",
                            m.shape(),
                            (row_sizes[bi], col_sizes[bj])
                        )));
                    }
                    trip.extend(m.triplets().map(|(i, j, v)| (row_off[bi] + i, col_off[bj] + j, v)));
                }
            }
        }
        Self::from_triplets(row_off[row_sizes.len()], col_off[col_sizes.len()], &trip)
    }

    /// Symmetry check `|M[i,j] - M[j,i]| <= rel_tol * max|M|` on stored pairs.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let tol = rel_tol * self.max_abs();
        self.triplets().all(|(i, j, v)| (v - self.get(j, i)).abs() <= tol)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows * self.ncols];
        for (i, j, v) in self.triplets() {
            out[i * self.ncols + j] += v;
        }
        out
    }

    /// Half bandwidths `(lower, upper)` of the stored pattern.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut lower = 0;
        let mut upper = 0;
        for (i, j, _) in self.triplets() {
            if i > j {
                lower = lower.max(i - j);
            } else {
                upper = upper.max(j - i);
            }
        }
        (lower, upper)
    }

    /// Symmetric permutation `P M Pᵀ` where `perm[new] = old`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Self {
        let mut inv = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let trip: Vec<_> = self.triplets().map(|(i, j, v)| (inv[i], inv[j], v)).collect();
        Self::from_triplets(self.nrows, self.ncols, &trip).expect("permutation in range")
    }
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut off = Vec::with_capacity(sizes.len() + 1);
    off.push(0);
    for &s in sizes {
        off.push(off.last().unwrap() + s);
    }
    off
}
