//! Matrix Market reader and writer (real `coordinate` and `array` formats,
//! `general`, `symmetric` and `skew-symmetric` qualifiers).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Matrix, Storage};
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
    SkewSymmetric,
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_header(line: &str) -> Result<(Layout, Field, Symmetry)> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != 5 || toks[0] != "%%MatrixMarket" {
        return Err(perr(1, "expected `%%MatrixMarket matrix <format> <field> <symmetry>`"));
    }
    if !toks[1].eq_ignore_ascii_case("matrix") {
        return Err(perr(1, format!("unsupported object `{}`", toks[1])));
    }
    let layout = match toks[2].to_ascii_lowercase().as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(perr(1, format!("unsupported format `{other}`"))),
    };
    let field = match toks[3].to_ascii_lowercase().as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" if layout == Layout::Coordinate => Field::Pattern,
        other => return Err(perr(1, format!("unsupported field `{other}`"))),
    };
    let symmetry = match toks[4].to_ascii_lowercase().as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(perr(1, format!("unsupported symmetry `{other}`"))),
    };
    Ok((layout, field, symmetry))
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| perr(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| perr(line, format!("cannot parse {what}")))
}

pub fn read_path(path: &Path) -> Result<Matrix> {
    read(BufReader::new(File::open(path)?))
}

pub fn read(reader: impl BufRead) -> Result<Matrix> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    let (layout, field, symmetry) = parse_header(&header?)?;

    let mut data = lines.filter_map(|(no, l)| match l {
        Ok(s) => {
            let t = s.trim();
            if t.is_empty() || t.starts_with('%') {
                None
            } else {
                Some(Ok((no, t.to_string())))
            }
        }
        Err(e) => Some(Err(e)),
    });

    let (size_no, size_line) = data.next().ok_or_else(|| perr(2, "missing size line"))??;
    let mut it = size_line.split_whitespace();
    let nr: usize = parse_num(it.next(), size_no, "row count")?;
    let nc: usize = parse_num(it.next(), size_no, "column count")?;
    if symmetry != Symmetry::General && nr != nc {
        return Err(perr(size_no, "symmetric storage needs a square matrix"));
    }

    match layout {
        Layout::Coordinate => {
            let nnz: usize = parse_num(it.next(), size_no, "entry count")?;
            let mut t = Vec::with_capacity(nnz * 2);
            for _ in 0..nnz {
                let (no, l) = data.next().ok_or_else(|| perr(size_no, "too few entries"))??;
                let mut it = l.split_whitespace();
                let i: usize = parse_num(it.next(), no, "row index")?;
                let j: usize = parse_num(it.next(), no, "column index")?;
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(perr(no, format!("index ({i}, {j}) out of range")));
                }
                let v: f64 = match field {
                    Field::Pattern => 1.0,
                    _ => parse_num(it.next(), no, "value")?,
                };
                let (i, j) = (i - 1, j - 1);
                match symmetry {
                    Symmetry::General => t.push((i, j, v)),
                    Symmetry::Symmetric | Symmetry::SkewSymmetric => {
                        if j > i {
                            return Err(perr(no, "symmetric storage expects the lower triangle"));
                        }
                        t.push((i, j, v));
                        if i != j {
                            let mirrored = if symmetry == Symmetry::Symmetric { v } else { -v };
                            t.push((j, i, mirrored));
                        }
                    }
                }
            }
            if let Some(extra) = data.next() {
                let (no, _) = extra?;
                return Err(perr(no, "more entries than declared"));
            }
            Matrix::sparse_from_triplets(nr, nc, &t).map_err(|e| perr(size_no, e.to_string()))
        }
        Layout::Array => {
            let mut values = vec![0.0; nr * nc];
            // column-major; symmetric variants list the lower triangle
            let mut slots = Vec::new();
            for j in 0..nc {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::SkewSymmetric => j + 1,
                };
                for i in start..nr {
                    slots.push((i, j));
                }
            }
            let mut last_no = size_no;
            for (i, j) in slots {
                let (no, l) = data.next().ok_or_else(|| perr(last_no, "too few entries"))??;
                last_no = no;
                let v: f64 = parse_num(l.split_whitespace().next(), no, "value")?;
                values[i * nc + j] = v;
                match symmetry {
                    Symmetry::General => {}
                    Symmetry::Symmetric => values[j * nc + i] = v,
                    Symmetry::SkewSymmetric => values[j * nc + i] = -v,
                }
            }
            if let Some(extra) = data.next() {
                let (no, _) = extra?;
                return Err(perr(no, "more entries than declared"));
            }
            Matrix::dense(nr, nc, values).map_err(|e| perr(size_no, e.to_string()))
        }
    }
}

pub fn write_path(m: &Matrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write(m, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes dense matrices in `array general` and sparse ones in
/// `coordinate general` form, values in shortest round-trip notation.
pub fn write(m: &Matrix, w: &mut impl Write) -> Result<()> {
    match m.storage() {
        Storage::DenseRowMajor(v) => {
            writeln!(w, "%%MatrixMarket matrix array real general")?;
            writeln!(w, "{} {}", m.n_rows(), m.n_cols())?;
            for j in 0..m.n_cols() {
                for i in 0..m.n_rows() {
                    writeln!(w, "{:?}", v[i * m.n_cols() + j])?;
                }
            }
        }
        Storage::SparseCompressed(c) => {
            writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
            writeln!(w, "{} {} {}", m.n_rows(), m.n_cols(), c.values.len())?;
            for (i, j, v) in m.entries() {
                writeln!(w, "{} {} {:?}", i + 1, j + 1, v)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Matrix> {
        read(s.as_bytes())
    }

    #[test]
    fn coordinate_general() {
        let m = parse(
            "%%MatrixMarket matrix coordinate real general\n% comment\n2 3 2\n1 1 1.5\n2 3 -2e-3\n",
        )
        .unwrap();
        assert!(m.is_sparse());
        assert_eq!(m.to_dense_values(), vec![1.5, 0.0, 0.0, 0.0, 0.0, -2e-3]);
    }

    #[test]
    fn coordinate_symmetric_mirrors() {
        let m = parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 4\n2 1 1\n").unwrap();
        assert_eq!(m.to_dense_values(), vec![4.0, 1.0, 1.0, 0.0]);
        let e = parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1\n");
        assert!(e.is_err());
    }

    #[test]
    fn array_formats() {
        let m = parse("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n").unwrap();
        assert_eq!(m.to_dense_values(), vec![1.0, 3.0, 2.0, 4.0]);
        let s = parse("%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n4\n").unwrap();
        assert_eq!(s.to_dense_values(), vec![1.0, 2.0, 2.0, 4.0]);
    }

    #[test]
    fn header_errors() {
        assert!(parse("%%MatrixMarket matrix coordinate complex general\n1 1 0\n").is_err());
        assert!(parse("%MatrixMarket matrix coordinate real general\n1 1 0\n").is_err());
        assert!(parse("%%MatrixMarket vector coordinate real general\n1 1 0\n").is_err());
        assert!(parse("").is_err());
        let short = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n");
        assert!(matches!(short, Err(Error::Parse { .. })));
        let oob = parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n");
        assert!(matches!(oob, Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn write_then_read_is_identity() {
        let d = Matrix::from_rows(&[&[0.1, -2.0], &[1e-300, 3.0]]).unwrap();
        let s = Matrix::sparse_from_triplets(3, 3, &[(0, 2, 0.1), (2, 0, -7.25), (1, 1, 1e20)]).unwrap();
        for m in [d, s] {
            let mut buf = Vec::new();
            write(&m, &mut buf).unwrap();
            let back = read(buf.as_slice()).unwrap();
            assert_eq!(back, m);
            let mut again = Vec::new();
            write(&back, &mut again).unwrap();
            assert_eq!(buf, again);
        }
    }
}
