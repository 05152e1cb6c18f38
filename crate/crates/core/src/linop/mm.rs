//! Matrix Market reading and writing.
//!
//! Supports `matrix coordinate real|integer|pattern general|symmetric` and
//! `matrix array real|integer general|symmetric`. Indices in files are 1-based.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::{DenseMatrix, SparseMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

struct Header {
    layout: Layout,
    field: Field,
    symmetry: Symmetry,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_header(line: &str) -> Result<Header> {
    let lower = line.to_ascii_lowercase();
    let tokens: Vec<&str> = lower.split_whitespace().collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix <layout> <field> <symmetry>'"));
    }
    let layout = match tokens[2] {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(1, format!("unsupported layout '{other}'"))),
    };
    let field = match tokens[3] {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" if layout == Layout::Coordinate => Field::Pattern,
        other => return Err(parse_err(1, format!("unsupported field '{other}'"))),
    };
    let symmetry = match tokens[4] {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };
    Ok(Header {
        layout,
        field,
        symmetry,
    })
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what}")))
}

/// Read any supported Matrix Market file as `(n, triplets)`. Symmetric
/// storage is expanded to both triangles.
fn read_triplets<R: BufRead>(reader: R) -> Result<(usize, Vec<(usize, usize, f64)>)> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => parse_header(&l?)?,
        None => return Err(parse_err(1, "empty file")),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    let mut array_pos = 0usize;
    let mut entries = 0usize;

    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut toks = t.split_whitespace();
        let Some((rows, cols, expected)) = size else {
            let rows: usize = parse_num(toks.next(), lineno, "row count")?;
            let cols: usize = parse_num(toks.next(), lineno, "column count")?;
            if rows != cols {
                return Err(parse_err(lineno, format!("matrix is {rows}×{cols}, not square")));
            }
            let expected = match header.layout {
                Layout::Coordinate => parse_num(toks.next(), lineno, "entry count")?,
                Layout::Array => match header.symmetry {
                    Symmetry::General => rows * cols,
                    Symmetry::Symmetric => rows * (rows + 1) / 2,
                },
            };
            size = Some((rows, cols, expected));
            continue;
        };

        match header.layout {
            Layout::Coordinate => {
                let i: usize = parse_num(toks.next(), lineno, "row index")?;
                let j: usize = parse_num(toks.next(), lineno, "column index")?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(parse_err(lineno, format!("index ({i}, {j}) out of range")));
                }
                let v = match header.field {
                    Field::Pattern => 1.0,
                    _ => parse_num(toks.next(), lineno, "value")?,
                };
                push_entry(&mut triplets, header.symmetry, i - 1, j - 1, v, lineno)?;
                entries += 1;
            }
            Layout::Array => {
                let v: f64 = parse_num(toks.next(), lineno, "value")?;
                // Column-major; symmetric arrays list the lower triangle only.
                let (i, j) = match header.symmetry {
                    Symmetry::General => (array_pos % rows, array_pos / rows),
                    Symmetry::Symmetric => lower_triangle_position(rows, array_pos),
                };
                if array_pos >= expected {
                    return Err(parse_err(lineno, "more values than the declared size"));
                }
                array_pos += 1;
                if v != 0.0 {
                    push_entry(&mut triplets, header.symmetry, i, j, v, lineno)?;
                }
            }
        }
    }

    let Some((n, _, expected)) = size else {
        return Err(parse_err(1, "missing size line"));
    };
    let got = match header.layout {
        Layout::Coordinate => entries,
        Layout::Array => array_pos,
    };
    if got != expected {
        return Err(parse_err(0, format!("expected {expected} entries, found {got}")));
    }
    Ok((n, triplets))
}

fn lower_triangle_position(n: usize, mut pos: usize) -> (usize, usize) {
    for j in 0..n {
        let len = n - j;
        if pos < len {
            return (j + pos, j);
        }
        pos -= len;
    }
    (n, n)
}

fn push_entry(
    out: &mut Vec<(usize, usize, f64)>,
    symmetry: Symmetry,
    i: usize,
    j: usize,
    v: f64,
    lineno: usize,
) -> Result<()> {
    if !v.is_finite() {
        return Err(parse_err(lineno, "non-finite value"));
    }
    out.push((i, j, v));
    if symmetry == Symmetry::Symmetric && i != j {
        out.push((j, i, v));
    }
    Ok(())
}

pub fn read_sparse<R: BufRead>(reader: R) -> Result<SparseMatrix> {
    let (n, t) = read_triplets(reader)?;
    SparseMatrix::from_triplets(n, &t)
}

pub fn read_dense<R: BufRead>(reader: R) -> Result<DenseMatrix> {
    let (n, t) = read_triplets(reader)?;
    let mut data = vec![0.0; n * n];
    for (i, j, v) in t {
        data[i * n + j] += v;
    }
    DenseMatrix::from_row_major(n, data)
}

pub fn read_sparse_path(path: impl AsRef<std::path::Path>) -> Result<SparseMatrix> {
    let f = std::fs::File::open(path)?;
    read_sparse(std::io::BufReader::new(f))
}

pub fn read_dense_path(path: impl AsRef<std::path::Path>) -> Result<DenseMatrix> {
    let f = std::fs::File::open(path)?;
    read_dense(std::io::BufReader::new(f))
}

/// Write in `array real general` format (column-major).
pub fn write_dense<W: Write>(mut w: W, a: &DenseMatrix) -> Result<()> {
    let n = a.n();
    let mut buf = String::new();
    writeln!(buf, "%%MatrixMarket matrix array real general").unwrap();
    writeln!(buf, "{n} {n}").unwrap();
    for j in 0..n {
        for i in 0..n {
            writeln!(buf, "{:e}", a.get(i, j)).unwrap();
        }
    }
    w.write_all(buf.as_bytes())?;
    Ok(())
}

/// Write in `coordinate real general` format.
pub fn write_sparse<W: Write>(mut w: W, a: &SparseMatrix) -> Result<()> {
    let n = a.n();
    let mut buf = String::new();
    writeln!(buf, "%%MatrixMarket matrix coordinate real general").unwrap();
    writeln!(buf, "{n} {n} {}", a.nnz()).unwrap();
    for (i, j, v) in a.triplets() {
        writeln!(buf, "{} {} {:e}", i + 1, j + 1, v).unwrap();
    }
    w.write_all(buf.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::LinearOperator;

    #[test]
    fn coordinate_symmetric_expands() {
        let src = "%%MatrixMarket matrix coordinate real symmetric\n% c\n3 3 3\n1 1 2.0\n2 1 -1\n3 3 4\n";
        let m = read_sparse(src.as_bytes()).unwrap();
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.get(0, 1), -1.0);
        assert_eq!(m.get(1, 0), -1.0);
        assert!(m.is_symmetric());
    }

    #[test]
    fn pattern_entries_are_ones() {
        let src = "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 2\n";
        let m = read_dense(src.as_bytes()).unwrap();
        assert_eq!(m.get(0, 1), 1.0);
    }

    #[test]
    fn array_is_column_major() {
        let src = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
        let m = read_dense(src.as_bytes()).unwrap();
        assert_eq!(m.row(0), &[1.0, 3.0]);
        assert_eq!(m.row(1), &[2.0, 4.0]);
    }

    #[test]
    fn symmetric_array_reads_lower_triangle() {
        let src = "%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n";
        let m = read_dense(src.as_bytes()).unwrap();
        assert_eq!(m.row(0), &[1.0, 2.0]);
        assert_eq!(m.row(1), &[2.0, 3.0]);
    }

    #[test]
    fn bad_index_reports_line() {
        let src = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        match read_sparse(src.as_bytes()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn dense_round_trip_is_exact() {
        let a = DenseMatrix::from_rows(&[vec![0.1, -2.5e-17], vec![3.0, 1.0 / 3.0]]).unwrap();
        let mut out = Vec::new();
        write_dense(&mut out, &a).unwrap();
        let b = read_dense(out.as_slice()).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }
}
