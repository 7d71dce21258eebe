//! Debug dumps of complex matrices as CSV: one labelled row per matrix row,
//! real and imaginary parts interleaved, header row naming the columns.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::channel::Topology;
use crate::error::{Result, WnvError};
use crate::linalg::CMatrix;

/// `c{cell}.m{sp}.k{user}` for every user row, in global row order.
pub fn user_labels(topology: &Topology) -> Vec<String> {
    let mut out = Vec::with_capacity(topology.total_users());
    for c in 0..topology.cell_count() {
        for m in 0..topology.sp_count() {
            for k in 0..topology.users[c][m] {
                out.push(format!("c{c}.m{m}.k{k}"));
            }
        }
    }
    out
}

/// `bs{cell}.n{antenna}` for every antenna column, in global column order.
pub fn antenna_labels(topology: &Topology) -> Vec<String> {
    (0..topology.cell_count())
        .flat_map(|l| (0..topology.antennas[l]).map(move |n| format!("bs{l}.n{n}")))
        .collect()
}

/// Renders `m` with the given row and column labels. `preamble` lines are
/// emitted first as `#` comments.
pub fn matrix_csv(m: &CMatrix, rows: &[String], cols: &[String], preamble: &[String]) -> Result<String> {
    if rows.len() != m.nrows() || cols.len() != m.ncols() {
        return Err(WnvError::DimensionMismatch(format!(
            "{} row / {} column labels for a {}x{} matrix",
            rows.len(),
            cols.len(),
            m.nrows(),
            m.ncols()
        )));
    }
    let mut s = String::new();
    for p in preamble {
        let _ = writeln!(s, "# {p}");
    }
    s.push_str("row");
    for c in cols {
        let _ = write!(s, ",{c}.re,{c}.im");
    }
    s.push('\n');
    for (i, label) in rows.iter().enumerate() {
        s.push_str(label);
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            let _ = write!(s, ",{},{}", z.re, z.im);
        }
        s.push('\n');
    }
    Ok(s)
}

/// Parses a file written by [`matrix_csv`] back into a matrix.
pub fn parse_matrix_csv(text: &str) -> Result<CMatrix> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| WnvError::Config("empty matrix dump".into()))?;
    let cols = (header.split(',').count() - 1) / 2;
    let mut data = Vec::new();
    let mut rows = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').skip(1).collect();
        if fields.len() != 2 * cols {
            return Err(WnvError::Config(format!("matrix dump row {rows} has {} values", fields.len())));
        }
        for pair in fields.chunks(2) {
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| WnvError::Config(format!("matrix dump value `{s}`: {e}")))
            };
            data.push(Complex64::new(parse(pair[0])?, parse(pair[1])?));
        }
        rows += 1;
    }
    Ok(CMatrix::from_row_slice(rows, cols, &data))
}

pub fn write_matrix(path: &Path, m: &CMatrix, rows: &[String], cols: &[String], preamble: &[String]) -> Result<()> {
    std::fs::write(path, matrix_csv(m, rows, cols, preamble)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let m = CMatrix::from_fn(2, 3, |i, j| Complex64::new(0.1 * i as f64 + 1e-17, -(j as f64) / 3.0));
        let text = matrix_csv(
            &m,
            &["a".into(), "b".into()],
            &["x".into(), "y".into(), "z".into()],
            &["manifest=abc".into()],
        )
        .unwrap();
        assert!(text.starts_with("# manifest=abc\nrow,x.re,x.im,y.re,y.im,z.re,z.im\n"));
        assert_eq!(parse_matrix_csv(&text).unwrap(), m);
    }

    #[test]
    fn labels_follow_layout() {
        let topo = Topology::hexagonal(2, 100.0, 2, 2, 1).unwrap();
        assert_eq!(user_labels(&topo), ["c0.m0.k0", "c0.m1.k0", "c1.m0.k0", "c1.m1.k0"]);
        assert_eq!(antenna_labels(&topo), ["bs0.n0", "bs0.n1", "bs1.n0", "bs1.n1"]);
        assert!(matrix_csv(&CMatrix::zeros(1, 1), &[], &[], &[]).is_err());
    }
}
