//! Matrix Market coordinate format (1-based indices, duplicates summed on load).

use std::fmt::Write as _;
use std::path::Path;

use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

#[derive(Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

/// Parses Matrix Market text. `origin` only labels error messages.
pub fn parse_matrix_market(text: &str, origin: &Path) -> Result<SparseMatrix> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(err(hline, format!("expected `{HEADER}`, found `{header}`")));
    }
    if tokens[2] != "coordinate" {
        return Err(err(hline, format!("unsupported storage `{}`", tokens[2])));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(err(hline, format!("unsupported field `{}`", tokens[3])));
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(err(hline, format!("unsupported symmetry `{other}`"))),
    };

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (sline, size) = data
        .next()
        .ok_or_else(|| err(hline + 1, "missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| err(sline, format!("bad size line `{size}`: {e}")))?;
    let [n_rows, n_cols, nnz] = dims[..] else {
        return Err(err(
            sline,
            format!("size line needs 3 integers, found `{size}`"),
        ));
    };

    let mut triplets = Vec::with_capacity(nnz);
    let mut seen = 0usize;
    for (lineno, line) in data {
        seen += 1;
        if seen > nnz {
            return Err(err(lineno, format!("more than the declared {nnz} entries")));
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(
                lineno,
                format!("expected `row col value`, found `{line}`"),
            ));
        }
        let index = |s: &str, bound: usize, what: &str| -> Result<usize> {
            let v: usize = s
                .parse()
                .map_err(|e| err(lineno, format!("bad {what} index `{s}`: {e}")))?;
            if v == 0 || v > bound {
                return Err(err(lineno, format!("{what} index {v} outside 1..={bound}")));
            }
            Ok(v - 1)
        };
        let r = index(fields[0], n_rows, "row")?;
        let c = index(fields[1], n_cols, "column")?;
        let v: f64 = fields[2]
            .parse()
            .map_err(|e| err(lineno, format!("bad value `{}`: {e}", fields[2])))?;
        if !v.is_finite() {
            return Err(err(lineno, format!("non-finite value `{}`", fields[2])));
        }
        triplets.push((r, c, v));
        if symmetry == Symmetry::Symmetric && r != c {
            triplets.push((c, r, v));
        }
    }
    if seen != nnz {
        return Err(err(
            text.lines().count(),
            format!("declared {nnz} entries, found {seen}"),
        ));
    }
    SparseMatrix::from_triplets(n_rows, n_cols, triplets)
}

/// Serializes as `coordinate real general`. Values round-trip exactly.
pub fn to_matrix_market(m: &SparseMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "{} {} {}", m.n_rows(), m.n_cols(), m.nnz());
    for (r, c, v) in m.triplets() {
        let _ = writeln!(out, "{} {} {:?}", r + 1, c + 1, v);
    }
    out
}

pub fn read_matrix_market(path: &Path) -> Result<SparseMatrix> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix_market(&text, path)
}

pub fn write_matrix_market(path: &Path, m: &SparseMatrix) -> Result<()> {
    std::fs::write(path, to_matrix_market(m)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
