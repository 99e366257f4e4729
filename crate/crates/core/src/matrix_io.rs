//! JSON matrix files: `{"dim": n, "entries": [[[re, im], ...], ...]}`, row-major.
//!
//! Writers emit every component with 17 significant digits so a file re-reads to a
//! bitwise-identical matrix.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::operator::{CMatrix, HermitianMatrix};

#[derive(Deserialize)]
struct MatrixFile {
    dim: usize,
    entries: Vec<Vec<[f64; 2]>>,
}

fn fmt_f64(out: &mut String, x: f64) {
    // {:.16e} = 17 significant digits
    write!(out, "{x:.16e}").expect("write to string");
}

/// Serialises the raw entries (any square matrix) in the file format.
pub fn to_json_string(m: &CMatrix) -> String {
    let n = m.nrows();
    let mut out = String::with_capacity(64 + n * n * 52);
    write!(out, "{{\"dim\": {n}, \"entries\": [").unwrap();
    for i in 0..n {
        if i > 0 {
            out.push_str(", ");
        }
        out.push('[');
        for j in 0..n {
            if j > 0 {
                out.push_str(", ");
            }
            let z = m[(i, j)];
            out.push('[');
            fmt_f64(&mut out, z.re);
            out.push_str(", ");
            fmt_f64(&mut out, z.im);
            out.push(']');
        }
        out.push(']');
    }
    out.push_str("]}");
    out
}

/// Parses the file format into a square complex matrix (no hermiticity check).
pub fn parse_entries(text: &str) -> Result<CMatrix> {
    let file: MatrixFile =
        serde_json::from_str(text).map_err(|e| Error::MalformedMatrix(e.to_string()))?;
    let n = file.dim;
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    if file.entries.len() != n {
        return Err(Error::MalformedMatrix(format!(
            "expected {n} rows, found {}",
            file.entries.len()
        )));
    }
    let mut m = CMatrix::zeros(n, n);
    for (i, row) in file.entries.iter().enumerate() {
        if row.len() != n {
            return Err(Error::MalformedMatrix(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        for (j, z) in row.iter().enumerate() {
            m[(i, j)] = Complex64::new(z[0], z[1]);
        }
    }
    Ok(m)
}

pub fn parse_hermitian(text: &str) -> Result<HermitianMatrix> {
    HermitianMatrix::new(parse_entries(text)?)
}

pub fn read_hermitian(path: &Path) -> Result<HermitianMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_hermitian(&text)
}

pub fn write_matrix(path: &Path, m: &HermitianMatrix) -> Result<()> {
    std::fs::write(path, to_json_string(m.entries()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_documented_layout() {
        let text = r#"{"dim": 2, "entries": [[[0.5, 0.0], [0.1, -0.2]], [[0.1, 0.2], [0.5, 0.0]]]}"#;
        let h = parse_hermitian(text).unwrap();
        assert_eq!(h.dim(), 2);
        assert_eq!(h.entries()[(0, 1)], Complex64::new(0.1, -0.2));
    }

    #[test]
    fn rejects_ragged_and_mismatched() {
        let ragged = r#"{"dim": 2, "entries": [[[1, 0], [0, 0]], [[0, 0]]]}"#;
        assert!(matches!(parse_entries(ragged), Err(Error::MalformedMatrix(_))));
        let rows = r#"{"dim": 3, "entries": [[[1, 0]]]}"#;
        assert!(matches!(parse_entries(rows), Err(Error::MalformedMatrix(_))));
        assert!(matches!(parse_entries("not json"), Err(Error::MalformedMatrix(_))));
        let asym = r#"{"dim": 2, "entries": [[[1, 0], [1, 0]], [[0, 0], [1, 0]]]}"#;
        assert!(matches!(
            parse_hermitian(asym),
            Err(Error::NonHermitianInput { .. })
        ));
    }

    #[test]
    fn writes_seventeen_significant_digits() {
        let m = CMatrix::from_element(1, 1, Complex64::new(0.1, 0.0));
        let s = to_json_string(&m);
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
    }

    proptest! {
        #[test]
        fn bitwise_round_trip(vals in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 18)) {
            let m = CMatrix::from_fn(3, 3, |i, j| Complex64::new(vals[2 * (3 * i + j) % 18], vals[(2 * (3 * i + j) + 1) % 18]));
            let back = parse_entries(&to_json_string(&m)).unwrap();
            for (a, b) in m.iter().zip(back.iter()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }
}
