//! Canonical text serialization of complex matrices, used both as the aux
//! tape contents for conditioning on a measurement and as an on-disk
//! format; plus the JSON and CSV forms of states and POVMs.
//!
//! A canonical serialization is a byte string: every entry, row-major,
//! contributes two decimal fields (real, imaginary) separated by `0x1F`,
//! and consecutive matrices are separated by `0x1E`. Decimals use the
//! shortest representation that reads back to the same `f64`, without an
//! exponent, and negative zero is written as `0`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;

pub const FIELD_SEP: u8 = 0x1F;
pub const MATRIX_SEP: u8 = 0x1E;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("bad decimal field {0:?}")]
    BadField(String),
    #[error("odd number of fields in a matrix")]
    OddFields,
    #[error("matrix with {0} entries is not square")]
    NotSquare(usize),
    #[error("matrices of different sizes")]
    Ragged,
    #[error("malformed matrix data: {0}")]
    Malformed(String),
}

fn decimal(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

/// Entries of one matrix, row-major, as the field-separated byte string.
fn entries_bytes<'a>(entries: impl Iterator<Item = &'a Complex64>, out: &mut Vec<u8>) {
    let mut first = true;
    for z in entries {
        for part in [z.re, z.im] {
            if !first {
                out.push(FIELD_SEP);
            }
            first = false;
            out.extend_from_slice(decimal(part).as_bytes());
        }
    }
}

pub fn canonical_matrices(matrices: &[DMatrix<Complex64>]) -> Vec<u8> {
    let mut out = Vec::new();
    for (k, m) in matrices.iter().enumerate() {
        if k > 0 {
            out.push(MATRIX_SEP);
        }
        // nalgebra stores column-major; walk rows explicitly.
        let rows: Vec<Complex64> = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)])
            .collect();
        entries_bytes(rows.iter(), &mut out);
    }
    out
}

/// A state vector serializes as the entries of a single matrix.
pub fn canonical_vector(amplitudes: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::new();
    entries_bytes(amplitudes.iter(), &mut out);
    out
}

fn parse_entries(chunk: &[u8]) -> Result<Vec<Complex64>, CodecError> {
    let fields = chunk
        .split(|b| *b == FIELD_SEP)
        .map(|f| {
            let s = std::str::from_utf8(f)
                .map_err(|_| CodecError::BadField(String::from_utf8_lossy(f).into()))?;
            s.parse::<f64>()
                .map_err(|_| CodecError::BadField(s.to_string()))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    if fields.len() % 2 != 0 {
        return Err(CodecError::OddFields);
    }
    Ok(fields
        .chunks(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect())
}

pub fn parse_canonical_matrices(bytes: &[u8]) -> Result<Vec<DMatrix<Complex64>>, CodecError> {
    let mut out: Vec<DMatrix<Complex64>> = Vec::new();
    for chunk in bytes.split(|b| *b == MATRIX_SEP) {
        let entries = parse_entries(chunk)?;
        let d = (entries.len() as f64).sqrt().round() as usize;
        if d * d != entries.len() || d == 0 {
            return Err(CodecError::NotSquare(entries.len()));
        }
        if out.first().is_some_and(|m| m.nrows() != d) {
            return Err(CodecError::Ragged);
        }
        out.push(DMatrix::from_row_slice(d, d, &entries));
    }
    Ok(out)
}

pub fn parse_canonical_vector(bytes: &[u8]) -> Result<Vec<Complex64>, CodecError> {
    if bytes.contains(&MATRIX_SEP) {
        return Err(CodecError::Malformed(
            "a state holds a single vector".into(),
        ));
    }
    parse_entries(bytes)
}

/// `<canonical bytes>` as an aux tape.
pub fn aux_for_matrices(matrices: &[DMatrix<Complex64>]) -> BitString {
    BitString::from_bytes(&canonical_matrices(matrices)).self_delimited()
}

/// `<binary(n)>` as an aux tape.
pub fn aux_for_integer(n: u64) -> BitString {
    BitString::binary(n).self_delimited()
}

/// JSON form of a matrix: rows of `[re, im]` pairs.
pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &DMatrix<Complex64>) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix) -> Result<DMatrix<Complex64>, CodecError> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(CodecError::Malformed(
            "matrix must be square and nonempty".into(),
        ));
    }
    let flat: Vec<Complex64> = rows
        .iter()
        .flatten()
        .map(|[re, im]| Complex64::new(*re, *im))
        .collect();
    Ok(DMatrix::from_row_slice(d, d, &flat))
}

/// `{"elements": [matrix, ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmFile {
    pub elements: Vec<JsonMatrix>,
}

/// `{"amplitudes": [[re, im], ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub amplitudes: Vec<[f64; 2]>,
}

/// Row-major CSV, one matrix row per line, each entry as `re,im`.
pub fn matrix_to_csv(m: &DMatrix<Complex64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{},{}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}
