//! Model JSON files.
//!
//! ```json
//! { "name": "H1", "n": 2, "representation": "rational",
//!   "entries": [[{"num": [20, 30], "den": [1, 13, 30]}, ...], ...] }
//! ```
//!
//! or `"representation": "statespace"` with `"A"`, `"B"`, `"C"`, `"D"` given
//! as row-major real arrays: either a list of rows or a flat list. Polynomial
//! coefficients are in descending powers of `s`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{RationalFunction, Representation, StateSpace, TransferMatrix};
use crate::{Error, RMatrix, Result};

#[derive(Debug, Serialize, Deserialize)]
struct EntryJson {
    num: Vec<f64>,
    den: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum MatrixJson {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    name: String,
    n: usize,
    representation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entries: Option<Vec<Vec<EntryJson>>>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    a: Option<MatrixJson>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    b: Option<MatrixJson>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    c: Option<MatrixJson>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    d: Option<MatrixJson>,
}

fn invalid(msg: String) -> Error {
    Error::InvalidModel(msg)
}

fn matrix(field: &str, m: MatrixJson, rows: Option<usize>, cols: Option<usize>) -> Result<RMatrix> {
    let empty = match &m {
        MatrixJson::Rows(r) => r.is_empty(),
        MatrixJson::Flat(v) => v.is_empty(),
    };
    if empty {
        // `[]` is an empty matrix of whatever shape the other blocks imply
        let (nr, nc) = (rows.unwrap_or(0), cols.unwrap_or(0));
        if nr * nc != 0 {
            return Err(invalid(format!("{field}: empty, expected {nr}x{nc}")));
        }
        return Ok(RMatrix::zeros(nr, nc));
    }
    match m {
        MatrixJson::Rows(r) => {
            let nr = r.len();
            let nc = r.first().map_or(cols.unwrap_or(0), Vec::len);
            if let Some((i, row)) = r.iter().enumerate().find(|(_, row)| row.len() != nc) {
                return Err(invalid(format!("{field}[{i}]: row has {} values, expected {nc}", row.len())));
            }
            Ok(RMatrix::from_fn(nr, nc, |i, j| r[i][j]))
        }
        MatrixJson::Flat(v) => {
            let (nr, nc) = match (rows, cols) {
                (Some(r), Some(c)) => (r, c),
                (Some(r), None) if r > 0 => (r, v.len() / r),
                (None, Some(c)) if c > 0 => (v.len() / c, c),
                (Some(0), None) | (None, Some(0)) => (0, 0),
                _ => {
                    let s = (v.len() as f64).sqrt().round() as usize;
                    (s, s)
                }
            };
            if nr * nc != v.len() {
                return Err(invalid(format!("{field}: {} values cannot form a {nr}x{nc} matrix", v.len())));
            }
            Ok(RMatrix::from_row_slice(nr, nc, &v))
        }
    }
}

fn from_json(m: ModelJson) -> Result<TransferMatrix> {
    let n = m.n;
    if n == 0 {
        return Err(invalid("n: must be at least 1".into()));
    }
    match m.representation.as_str() {
        "rational" => {
            let entries = m.entries.ok_or_else(|| invalid("entries: required for rational models".into()))?;
            if entries.len() != n {
                return Err(invalid(format!("entries: {} rows, expected n = {n}", entries.len())));
            }
            let mut rows = Vec::with_capacity(n);
            for (i, row) in entries.into_iter().enumerate() {
                if row.len() != n {
                    return Err(invalid(format!("entries[{i}]: {} columns, expected n = {n}", row.len())));
                }
                let mut out = Vec::with_capacity(n);
                for (j, e) in row.into_iter().enumerate() {
                    let h = RationalFunction::new(e.num, e.den)
                        .map_err(|err| invalid(format!("entries[{i}][{j}]: {err}")))?;
                    out.push(h);
                }
                rows.push(out);
            }
            TransferMatrix::rational(m.name, rows)
        }
        "statespace" => {
            let req = |f: &str, v: Option<MatrixJson>| v.ok_or_else(|| invalid(format!("{f}: required for statespace models")));
            let d = matrix("D", req("D", m.d)?, Some(n), Some(n))?;
            let a = matrix("A", req("A", m.a)?, None, None)?;
            let nx = a.nrows();
            if a.ncols() != nx {
                return Err(invalid(format!("A: {}x{} is not square", nx, a.ncols())));
            }
            let b = matrix("B", req("B", m.b)?, Some(nx), Some(n))?;
            let c = matrix("C", req("C", m.c)?, Some(n), Some(nx))?;
            if d.nrows() != n || d.ncols() != n {
                return Err(invalid(format!("D: {}x{}, expected {n}x{n}", d.nrows(), d.ncols())));
            }
            let ss = StateSpace::new(a, b, c, d).map_err(|e| invalid(e.to_string()))?;
            TransferMatrix::state_space(m.name, ss)
        }
        other => Err(invalid(format!(
            "representation: expected \"rational\" or \"statespace\", got {other:?}"
        ))),
    }
}

/// Parses a model document. Syntax errors carry line and column.
pub fn parse_model(text: &str) -> Result<TransferMatrix> {
    let m: ModelJson = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
    from_json(m)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TransferMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| match e {
        Error::InvalidModel(msg) => invalid(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn rows(m: &RMatrix) -> MatrixJson {
    MatrixJson::Rows((0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
}

/// Serializes a model in the same format [`parse_model`] reads.
pub fn to_json(h: &TransferMatrix) -> String {
    let doc = match h.representation() {
        Representation::Rational(entries) => ModelJson {
            name: h.name().to_string(),
            n: h.n(),
            representation: "rational".into(),
            entries: Some(
                entries
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|e| EntryJson {
                                num: e.num().to_vec(),
                                den: e.den().to_vec(),
                            })
                            .collect()
                    })
                    .collect(),
            ),
            a: None,
            b: None,
            c: None,
            d: None,
        },
        Representation::StateSpace(ss) => ModelJson {
            name: h.name().to_string(),
            n: h.n(),
            representation: "statespace".into(),
            entries: None,
            a: Some(rows(&ss.a)),
            b: Some(rows(&ss.b)),
            c: Some(rows(&ss.c)),
            d: Some(rows(&ss.d)),
        },
    };
    serde_json::to_string_pretty(&doc).expect("model serializes")
}
