//! Matrix Market reader and writer.
//!
//! Reads coordinate and array files with real, complex or integer values and
//! general, symmetric, Hermitian or skew-symmetric storage. Symmetric storage
//! is expanded on read. Pattern files are rejected since every use here needs
//! values.

use std::fmt::Write as _;
use std::path::Path;

use crate::sparse::SparseMatrix;
use crate::{CMat, Cplx, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Complex,
    Integer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Hermitian,
    Skew,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix_market(&text)
}

pub fn load_dense(path: impl AsRef<Path>) -> Result<CMat> {
    Ok(load_matrix_market(path)?.to_dense())
}

pub fn parse_matrix_market(text: &str) -> Result<SparseMatrix> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, format!("malformed header '{header}'")));
    }
    let format = match tokens[2].as_str() {
        "coordinate" => Format::Coordinate,
        "array" => Format::Array,
        other => return Err(parse_err(1, format!("unknown format '{other}'"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "complex" => Field::Complex,
        "integer" => Field::Integer,
        "pattern" => return Err(Error::UnsupportedField("pattern".into())),
        other => return Err(parse_err(1, format!("unknown field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "hermitian" => Symmetry::Hermitian,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(parse_err(1, format!("unknown symmetry '{other}'"))),
    };
    if symmetry == Symmetry::Hermitian && field != Field::Complex {
        return Err(parse_err(1, "hermitian storage requires complex values"));
    }

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = data.next().ok_or_else(|| parse_err(2, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(size_line, format!("bad size line: {e}")))?;
    let expected_dims = if format == Format::Coordinate { 3 } else { 2 };
    if dims.len() != expected_dims {
        return Err(parse_err(size_line, format!("expected {expected_dims} integers on the size line")));
    }
    let (nrows, ncols) = (dims[0], dims[1]);
    if symmetry != Symmetry::General && nrows != ncols {
        return Err(parse_err(size_line, "symmetric storage requires a square matrix"));
    }

    let value_count = match field {
        Field::Complex => 2,
        _ => 1,
    };
    let parse_value = |line: usize, toks: &[&str]| -> Result<Cplx> {
        let num = |t: &str| -> Result<f64> {
            t.parse::<f64>().map_err(|_| parse_err(line, format!("bad number '{t}'")))
        };
        match field {
            Field::Complex => Ok(Cplx::new(num(toks[0])?, num(toks[1])?)),
            Field::Integer => {
                let v: i64 = toks[0].parse().map_err(|_| parse_err(line, format!("bad integer '{}'", toks[0])))?;
                Ok(Cplx::new(v as f64, 0.0))
            }
            Field::Real => Ok(Cplx::new(num(toks[0])?, 0.0)),
        }
    };

    let mut trip: Vec<(usize, usize, Cplx)> = Vec::new();
    let mut push = |i: usize, j: usize, v: Cplx| {
        trip.push((i, j, v));
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => trip.push((j, i, v)),
                Symmetry::Hermitian => trip.push((j, i, v.conj())),
                Symmetry::Skew => trip.push((j, i, -v)),
            }
        }
    };

    match format {
        Format::Coordinate => {
            let nnz = dims[2];
            for _ in 0..nnz {
                let (ln, l) = data.next().ok_or_else(|| parse_err(0, format!("expected {nnz} entries")))?;
                let toks: Vec<&str> = l.split_whitespace().collect();
                if toks.len() != 2 + value_count {
                    return Err(parse_err(ln, format!("expected {} fields", 2 + value_count)));
                }
                let idx = |t: &str, bound: usize| -> Result<usize> {
                    let k: usize = t.parse().map_err(|_| parse_err(ln, format!("bad index '{t}'")))?;
                    if k == 0 || k > bound {
                        return Err(parse_err(ln, format!("index {k} out of range 1..={bound}")));
                    }
                    Ok(k - 1)
                };
                let i = idx(toks[0], nrows)?;
                let j = idx(toks[1], ncols)?;
                if symmetry != Symmetry::General && i < j {
                    return Err(parse_err(ln, "symmetric storage must list the lower triangle"));
                }
                push(i, j, parse_value(ln, &toks[2..])?);
            }
        }
        Format::Array => {
            // Column-major; symmetric storage lists the lower triangle only and
            // skew storage omits the diagonal.
            for j in 0..ncols {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Skew => j + 1,
                    _ => j,
                };
                for i in start..nrows {
                    let (ln, l) = data
                        .next()
                        .ok_or_else(|| parse_err(0, "array data ends early"))?;
                    let toks: Vec<&str> = l.split_whitespace().collect();
                    if toks.len() != value_count {
                        return Err(parse_err(ln, format!("expected {value_count} fields")));
                    }
                    push(i, j, parse_value(ln, &toks)?);
                }
            }
        }
    }
    if let Some((ln, _)) = data.next() {
        return Err(parse_err(ln, "trailing data after the declared entries"));
    }
    SparseMatrix::from_triplets(nrows, ncols, trip)
}

fn fmt_value(out: &mut String, v: Cplx, complex: bool) {
    if complex {
        let _ = write!(out, "{:.16e} {:.16e}", v.re, v.im);
    } else {
        let _ = write!(out, "{:.16e}", v.re);
    }
}

/// Coordinate general storage; the field is real when every imaginary part is
/// zero. Values are printed with 17 significant digits, which round-trips
/// every finite double exactly.
pub fn format_matrix_market(m: &SparseMatrix) -> String {
    let complex = !m.is_real();
    let mut out = format!(
        "%%MatrixMarket matrix coordinate {} general\n{} {} {}\n",
        if complex { "complex" } else { "real" },
        m.nrows(),
        m.ncols(),
        m.nnz()
    );
    for (i, j, v) in m.triplets() {
        let _ = write!(out, "{} {} ", i + 1, j + 1);
        fmt_value(&mut out, v, complex);
        out.push('\n');
    }
    out
}

/// Array general storage for dense data.
pub fn format_dense(m: &CMat) -> String {
    let complex = m.iter().any(|v| v.im != 0.0);
    let mut out = format!(
        "%%MatrixMarket matrix array {} general\n{} {}\n",
        if complex { "complex" } else { "real" },
        m.nrows(),
        m.ncols()
    );
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            fmt_value(&mut out, m[(i, j)], complex);
            out.push('\n');
        }
    }
    out
}

pub fn write_matrix_market(path: impl AsRef<Path>, m: &SparseMatrix) -> Result<()> {
    std::fs::write(path, format_matrix_market(m))?;
    Ok(())
}

pub fn write_dense(path: impl AsRef<Path>, m: &CMat) -> Result<()> {
    std::fs::write(path, format_dense(m))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cplx {
        Cplx::new(re, im)
    }

    #[test]
    fn reads_coordinate_diagonal() {
        let m = parse_matrix_market("%%MatrixMarket matrix coordinate real general\n% c\n2 2 2\n1 1 1.0\n2 2 2.0\n")
            .unwrap();
        assert_eq!(m.to_dense(), CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0)])));
    }

    #[test]
    fn expands_symmetric_storage() {
        let m = parse_matrix_market("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 3.0\n").unwrap();
        assert_eq!(m.get(0, 1), c(3.0, 0.0));
        assert_eq!(m.get(1, 0), c(3.0, 0.0));
    }

    #[test]
    fn expands_hermitian_storage() {
        let m = parse_matrix_market("%%MatrixMarket matrix coordinate complex hermitian\n2 2 2\n1 1 1 0\n2 1 3 4\n")
            .unwrap();
        assert_eq!(m.get(1, 0), c(3.0, 4.0));
        assert_eq!(m.get(0, 1), c(3.0, -4.0));
    }

    #[test]
    fn malformed_header_is_line_one() {
        let err = parse_matrix_market("%%MatrixMarkt matrix coordinate real general\n1 1 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn pattern_is_unsupported() {
        let err = parse_matrix_market("%%MatrixMarket matrix coordinate pattern general\n1 1 1\n1 1\n").unwrap_err();
        assert!(matches!(err, Error::UnsupportedField(_)));
    }

    #[test]
    fn bad_entry_reports_its_line() {
        let err = parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n3 1 2.0\n")
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }));
    }

    #[test]
    fn reads_array_format() {
        let m = parse_matrix_market("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n").unwrap();
        assert_eq!(m.get(1, 0), c(2.0, 0.0));
        assert_eq!(m.get(0, 1), c(3.0, 0.0));
    }

    #[test]
    fn round_trip_is_exact() {
        let vals = [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, std::f64::consts::PI];
        let real = SparseMatrix::from_triplets(3, 2, vals.iter().enumerate().map(|(k, &v)| (k % 3, k % 2, c(v, 0.0))))
            .unwrap();
        assert_eq!(parse_matrix_market(&format_matrix_market(&real)).unwrap(), real);

        let cplx = SparseMatrix::from_triplets(2, 2, vec![(0, 1, c(0.1, -2.0 / 7.0)), (1, 1, c(1e-17, 3.0))]).unwrap();
        let back = parse_matrix_market(&format_matrix_market(&cplx)).unwrap();
        for ((_, _, a), (_, _, b)) in back.triplets().zip(cplx.triplets()) {
            assert!((a - b).norm() <= 1e-15 * b.norm());
        }

        let dense = CMat::from_fn(3, 2, |i, j| c(i as f64 / 7.0, j as f64 / 3.0));
        assert_eq!(parse_matrix_market(&format_dense(&dense)).unwrap().to_dense(), dense);
    }
}
