//! JSON formats for states and filters.
//!
//! Complex entries are `[re, im]` pairs:
//!
//! ```json
//! {"rho": [[[0.5, 0], [0, 0], [0, 0], [0.5, 0]], ...]}
//! {"O_A": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]], "O_B": ...}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filtering::{FilterError, LocalFilter};
use crate::linalg::{c, Mat2c, Mat4c};
use crate::qstate::{DensityMatrix2Q, StateError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("expected a {rows}x{cols} matrix of [re, im] pairs in field '{field}'")]
    Shape { field: &'static str, rows: usize, cols: usize },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

type Rows = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Serialize, Deserialize)]
struct StateFile {
    rho: Rows,
}

#[derive(Debug, Serialize, Deserialize)]
struct FilterFile {
    #[serde(rename = "O_A")]
    o_a: Rows,
    #[serde(rename = "O_B")]
    o_b: Rows,
}

fn check_shape(rows: &Rows, n: usize, field: &'static str) -> Result<(), IoError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(IoError::Shape { field, rows: n, cols: n });
    }
    Ok(())
}

fn to_rows<'a>(n: usize, get: impl Fn(usize, usize) -> &'a crate::C64) -> Rows {
    (0..n)
        .map(|i| (0..n).map(|j| { let z = get(i, j); [z.re, z.im] }).collect())
        .collect()
}

pub fn parse_state_json(text: &str) -> Result<DensityMatrix2Q, IoError> {
    let f: StateFile = serde_json::from_str(text)?;
    check_shape(&f.rho, 4, "rho")?;
    let m = Mat4c::from_fn(|i, j| c(f.rho[i][j][0], f.rho[i][j][1]));
    Ok(DensityMatrix2Q::new(m)?)
}

pub fn state_to_json(rho: &DensityMatrix2Q) -> String {
    let m = rho.matrix();
    let f = StateFile {
        rho: to_rows(4, |i, j| &m[(i, j)]),
    };
    serde_json::to_string_pretty(&f).expect("plain numeric data serializes")
}

pub fn parse_filter_json(text: &str) -> Result<LocalFilter, IoError> {
    let f: FilterFile = serde_json::from_str(text)?;
    check_shape(&f.o_a, 2, "O_A")?;
    check_shape(&f.o_b, 2, "O_B")?;
    let a = Mat2c::from_fn(|i, j| c(f.o_a[i][j][0], f.o_a[i][j][1]));
    let b = Mat2c::from_fn(|i, j| c(f.o_b[i][j][0], f.o_b[i][j][1]));
    Ok(LocalFilter::new(a, b)?)
}

pub fn filter_to_json(f: &LocalFilter) -> String {
    let (a, b) = (f.op_a(), f.op_b());
    let file = FilterFile {
        o_a: to_rows(2, |i, j| &a[(i, j)]),
        o_b: to_rows(2, |i, j| &b[(i, j)]),
    };
    serde_json::to_string_pretty(&file).expect("plain numeric data serializes")
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_state_file(path: &Path) -> Result<DensityMatrix2Q, IoError> {
    parse_state_json(&read(path)?)
}

pub fn read_filter_file(path: &Path) -> Result<LocalFilter, IoError> {
    parse_filter_json(&read(path)?)
}
