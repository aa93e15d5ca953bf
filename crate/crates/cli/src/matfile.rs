//! Plain-text matrix files.
//!
//! Format: a header line `svdstream-matrix v1 <rows> <cols>` followed by
//! rows*cols whitespace-separated decimal values in row-major order (one row
//! per line as written, but any whitespace layout parses). Values are
//! printed with Rust's shortest round-tripping notation, so write-then-read
//! reproduces every entry bit for bit.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use svdstream_core::DenseMatrix;

use crate::CliError;

const MAGIC: &str = "svdstream-matrix";
const VERSION: &str = "v1";

fn render(m: &DenseMatrix) -> String {
    let mut out = format!("{MAGIC} {VERSION} {} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                out.push(' ');
            }
            out.push_str(&format!("{:e}", m.get(i, j)));
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<(), CliError> {
    fs::write(path, render(m)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_matrix_stdout(m: &DenseMatrix) -> Result<(), CliError> {
    io::stdout()
        .lock()
        .write_all(render(m).as_bytes())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn parse(text: &str, origin: &str) -> Result<DenseMatrix, CliError> {
    let bad = |msg: String| CliError::Parse(format!("{origin}: {msg}"));
    let mut tokens = text.split_whitespace();
    match (tokens.next(), tokens.next()) {
        (Some(MAGIC), Some(VERSION)) => {}
        (Some(MAGIC), v) => {
            return Err(bad(format!("unsupported version {:?}", v.unwrap_or(""))));
        }
        _ => return Err(bad(format!("missing `{MAGIC} {VERSION}` header"))),
    }
    let mut dim = |what: &str| -> Result<usize, CliError> {
        tokens
            .next()
            .ok_or_else(|| bad(format!("missing {what} in header")))?
            .parse()
            .map_err(|_| bad(format!("{what} is not a count")))
    };
    let rows = dim("row count")?;
    let cols = dim("column count")?;
    let mut data = Vec::with_capacity(rows * cols);
    for tok in tokens.by_ref() {
        if data.len() == rows * cols {
            return Err(bad(format!("more than {rows}x{cols} values")));
        }
        let v: f64 = tok
            .parse()
            .map_err(|_| bad(format!("value {} is not a number: {tok:?}", data.len() + 1)))?;
        data.push(v);
    }
    if data.len() != rows * cols {
        return Err(bad(format!("expected {rows}x{cols} values, found {}", data.len())));
    }
    DenseMatrix::new(rows, cols, data).map_err(|e| bad(e.to_string()))
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}

/// Reads a matrix file that must hold a single row or a single column.
pub fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    let m = read_matrix(path)?;
    if m.rows() != 1 && m.cols() != 1 {
        return Err(CliError::Parse(format!(
            "{}: expected a vector (one row or one column), found {}x{}",
            path.display(),
            m.rows(),
            m.cols()
        )));
    }
    Ok(m.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_matches_documented_layout() {
        let m = DenseMatrix::new(2, 2, vec![1.0, -0.5, 0.0, 2.25e-3]).unwrap();
        let text = render(&m);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("svdstream-matrix v1 2 2"));
        assert_eq!(lines.next(), Some("1e0 -5e-1"));
        assert_eq!(lines.next(), Some("0e0 2.25e-3"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let vals = vec![
            1.0 / 3.0,
            -std::f64::consts::PI,
            1.234567890123456e-300,
            9.87654321e307,
            0.0,
            -0.0,
        ];
        let m = DenseMatrix::new(2, 3, vals.clone()).unwrap();
        let back = parse(&render(&m), "test").unwrap();
        assert_eq!(back.rows(), 2);
        assert_eq!(back.cols(), 3);
        for (a, b) in back.as_slice().iter().zip(&vals) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(matches!(parse("", "t"), Err(CliError::Parse(_))));
        assert!(matches!(parse("wrong-magic v1 1 1\n0", "t"), Err(CliError::Parse(_))));
        assert!(matches!(parse("svdstream-matrix v2 1 1\n0", "t"), Err(CliError::Parse(_))));
        assert!(matches!(parse("svdstream-matrix v1 2 2\n1 2 3", "t"), Err(CliError::Parse(_))));
        assert!(matches!(parse("svdstream-matrix v1 2 2\n1 2 3 4 5", "t"), Err(CliError::Parse(_))));
        assert!(matches!(parse("svdstream-matrix v1 1 2\n1 pancake", "t"), Err(CliError::Parse(_))));
        // Non-finite values are data errors, not layout errors.
        assert!(parse("svdstream-matrix v1 1 1\nNaN", "t").is_err());
    }

    #[test]
    fn vectors_accept_rows_and_columns_only() {
        let dir = tempfile::tempdir().unwrap();
        let row = dir.path().join("row");
        let col = dir.path().join("col");
        let sq = dir.path().join("sq");
        write_matrix(&row, &DenseMatrix::new(1, 3, vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        write_matrix(&col, &DenseMatrix::new(3, 1, vec![4.0, 5.0, 6.0]).unwrap()).unwrap();
        write_matrix(&sq, &DenseMatrix::new(2, 2, vec![0.0; 4]).unwrap()).unwrap();
        assert_eq!(read_vector(&row).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(read_vector(&col).unwrap(), vec![4.0, 5.0, 6.0]);
        assert!(matches!(read_vector(&sq), Err(CliError::Parse(_))));
        assert!(matches!(read_matrix(&dir.path().join("absent")), Err(CliError::Io(_))));
    }
}
