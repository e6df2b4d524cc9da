use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use crate::linalg::SparseMatrix;

/// MatrixMarket coordinate text: a banner, `rows cols nnz`, then one
/// 1-based `row col value` line per stored entry.
pub fn matrix_market(m: &SparseMatrix) -> String {
    let mut s = String::new();
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", m.nrows(), m.ncols(), m.nnz());
    for (i, j, v) in m.triplets() {
        let _ = writeln!(s, "{} {} {:.16e}", i + 1, j + 1, v);
    }
    s
}

pub fn write_matrix_market(m: &SparseMatrix, path: &Path) -> io::Result<()> {
    let mut f = io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(matrix_market(m).as_bytes())?;
    f.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_roundtrip_precision() {
        let v = 1.0 / 3.0;
        let m = SparseMatrix::from_triplets(2, 3, &[(0, 2, v), (1, 0, -2.0)]).unwrap();
        let text = matrix_market(&m);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "2 3 2");
        let parsed: f64 = lines[2].split_whitespace().nth(2).unwrap().parse().unwrap();
        assert_eq!(parsed, v);
        assert!(lines[2].starts_with("1 3 "));
    }
}
