//! Matrix Market reading and writing (real `coordinate` and `array`,
//! `general`, `symmetric` or `skew-symmetric`).

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn parse_error(path: &str, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        reason: reason.into(),
    }
}

pub fn read_matrix_market(path: &Path) -> Result<DMatrix<f64>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::MissingFile(path.display().to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    parse_matrix_market(&text, &path.display().to_string())
}

/// Parses Matrix Market text; `origin` only labels errors.
pub fn parse_matrix_market(text: &str, origin: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_error(origin, 1, "empty file"))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_error(origin, 1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_error(origin, 1, format!("unsupported format '{other}'"))),
    };
    match tokens[3].as_str() {
        "real" | "integer" | "double" => {}
        "complex" => return Err(parse_error(origin, 1, "real-valued required")),
        other => return Err(parse_error(origin, 1, format!("unsupported field '{other}'"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(parse_error(origin, 1, format!("unsupported symmetry '{other}'"))),
    };

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = data
        .next()
        .ok_or_else(|| parse_error(origin, 1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_error(origin, size_line, format!("bad size line: {e}")))?;
    let expected_len = if layout == Layout::Coordinate { 3 } else { 2 };
    if dims.len() != expected_len {
        return Err(parse_error(
            origin,
            size_line,
            format!("size line needs {expected_len} integers, found {}", dims.len()),
        ));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if symmetry != Symmetry::General && rows != cols {
        return Err(parse_error(origin, size_line, "symmetric storage requires a square matrix"));
    }
    let mut a = DMatrix::zeros(rows, cols);

    let number = |line: usize, tok: &str| -> Result<f64> {
        let v: f64 = tok
            .parse()
            .map_err(|_| parse_error(origin, line, format!("'{tok}' is not a number")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(parse_error(origin, line, format!("non-finite value '{tok}'")))
        }
    };
    let mirror = |a: &mut DMatrix<f64>, i: usize, j: usize, v: f64| {
        a[(i, j)] = v;
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => a[(j, i)] = v,
                Symmetry::SkewSymmetric => a[(j, i)] = -v,
            }
        }
    };

    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            let mut seen = 0;
            for (ln, l) in data {
                let t: Vec<&str> = l.split_whitespace().collect();
                if t.len() != 3 {
                    return Err(parse_error(origin, ln, format!("expected 'i j value', found {} fields", t.len())));
                }
                let idx = |tok: &str, max: usize| -> Result<usize> {
                    match tok.parse::<usize>() {
                        Ok(k) if k >= 1 && k <= max => Ok(k - 1),
                        _ => Err(parse_error(origin, ln, format!("index '{tok}' outside 1..={max}"))),
                    }
                };
                let (i, j) = (idx(t[0], rows)?, idx(t[1], cols)?);
                if symmetry != Symmetry::General && j > i {
                    return Err(parse_error(origin, ln, "symmetric storage lists the lower triangle only"));
                }
                mirror(&mut a, i, j, number(ln, t[2])?);
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_error(origin, size_line, format!("declared {nnz} entries, found {seen}")));
            }
        }
        Layout::Array => {
            // Column-major; symmetric storage lists the lower triangle.
            let slots: Vec<(usize, usize)> = (0..cols)
                .flat_map(|j| {
                    let start = if symmetry == Symmetry::General {
                        0
                    } else if symmetry == Symmetry::Symmetric {
                        j
                    } else {
                        j + 1
                    };
                    (start..rows).map(move |i| (i, j))
                })
                .collect();
            let mut k = 0;
            for (ln, l) in data {
                for tok in l.split_whitespace() {
                    if k == slots.len() {
                        return Err(parse_error(origin, ln, "more values than the declared size"));
                    }
                    let (i, j) = slots[k];
                    mirror(&mut a, i, j, number(ln, tok)?);
                    k += 1;
                }
            }
            if k != slots.len() {
                return Err(parse_error(origin, size_line, format!("declared {} values, found {k}", slots.len())));
            }
        }
    }
    Ok(a)
}

/// Dense `array general` text; every value with 17 significant digits so
/// that reading it back is bit-exact.
pub fn format_matrix_market(a: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(24 * a.len() + 64);
    out.push_str("%%MatrixMarket matrix array real general\n");
    out.push_str(&format!("{} {}\n", a.nrows(), a.ncols()));
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            out.push_str(&format!("{:.16e}\n", a[(i, j)]));
        }
    }
    out
}

pub fn write_matrix_market(path: &Path, a: &DMatrix<f64>) -> Result<()> {
    fs::write(path, format_matrix_market(a))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_coordinate_expands() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 4\n1 1 2\n2 1 -1\n3 2 -1\n3 3 2\n";
        let a = parse_matrix_market(text, "t").unwrap();
        let expect = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 0.0, -1.0, 0.0, -1.0, 2.0]);
        assert_eq!(a, expect);
    }

    #[test]
    fn complex_rejected() {
        let err = parse_matrix_market("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n", "c")
            .unwrap_err();
        match err {
            Error::Parse { line, reason, .. } => {
                assert_eq!(line, 1);
                assert_eq!(reason, "real-valued required");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn array_general_column_major() {
        let a = parse_matrix_market("%%MatrixMarket matrix array real general\n2 3\n1\n2\n3\n4\n5\n6\n", "a").unwrap();
        assert_eq!(a, DMatrix::from_row_slice(2, 3, &[1.0, 3.0, 5.0, 2.0, 4.0, 6.0]));
    }

    #[test]
    fn array_symmetric() {
        let a = parse_matrix_market("%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n", "a").unwrap();
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n3 1 2.0\n", "x")
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err:?}");
        let err = parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 abc\n", "x").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n", "x").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse_matrix_market("", "x").is_err());
        assert!(parse_matrix_market("hello\n", "x").is_err());
    }

    #[test]
    fn missing_file() {
        let err = read_matrix_market(Path::new("/definitely/not/here.mtx")).unwrap_err();
        assert!(matches!(err, Error::MissingFile(_)));
    }

    #[test]
    fn write_read_bit_exact() {
        let a = DMatrix::from_row_slice(2, 2, &[0.1, 1.0 / 3.0, -2.5e-300, std::f64::consts::PI]);
        let b = parse_matrix_market(&format_matrix_market(&a), "w").unwrap();
        assert_eq!(a.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                   b.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }
}
