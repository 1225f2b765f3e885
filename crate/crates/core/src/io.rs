//! Plain-text and binary artifact writers shared by all modules.
//!
//! CSV files start with `#`-prefixed comment lines (provenance, parameters), then a
//! header row, then data. Floats are written in shortest round-trip form so output is
//! byte-identical across runs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An in-memory CSV table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            comments: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(mut self, line: impl Into<String>) -> Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            for line in c.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_bytes(path, self.render().as_bytes())
    }
}

/// Shortest round-trip decimal form; infinities as `inf`/`-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Binary matrix dump: `u64` rows, `u64` cols, then the entries column by column, all little-endian.
pub fn matrix_to_le_bytes(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * m.len());
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for x in m.as_slice() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn matrix_from_le_bytes(bytes: &[u8]) -> Result<DMatrix<f64>> {
    let word = |i: usize| -> Option<[u8; 8]> { bytes.get(8 * i..8 * i + 8)?.try_into().ok() };
    let bad = || Error::contract("truncated matrix file");
    let rows = u64::from_le_bytes(word(0).ok_or_else(bad)?) as usize;
    let cols = u64::from_le_bytes(word(1).ok_or_else(bad)?) as usize;
    if bytes.len() != 16 + 8 * rows * cols {
        return Err(bad());
    }
    let data = (0..rows * cols).map(|k| f64::from_le_bytes(word(k + 2).unwrap())).collect::<Vec<_>>();
    Ok(DMatrix::from_vec(rows, cols, data))
}
