//! Dense feature matrices harvested from the reservoir.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major matrix with one row per sample (or time step) and one labelled
/// column per reservoir output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    col_meta: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>, col_meta: Vec<String>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if col_meta.len() != cols {
            return Err(Error::ShapeMismatch(format!(
                "{} column labels for {cols} columns",
                col_meta.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "feature ({}, {}) is {}",
                i / cols.max(1),
                i % cols.max(1),
                values[i]
            )));
        }
        Ok(Self {
            rows,
            cols,
            values,
            col_meta,
        })
    }

    /// Matrix with default `col_{j}` labels.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        let values = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), cols, values, default_meta(cols))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn col_meta(&self) -> &[String] {
        &self.col_meta
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Rows `start..end`.
    pub fn slice_rows(&self, start: usize, end: usize) -> FeatureMatrix {
        FeatureMatrix {
            rows: end - start,
            cols: self.cols,
            values: self.values[start * self.cols..end * self.cols].to_vec(),
            col_meta: self.col_meta.clone(),
        }
    }

    /// Rows picked by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            rows: idx.len(),
            cols: self.cols,
            values,
            col_meta: self.col_meta.clone(),
        }
    }

    /// CSV with header `col_0,...,col_{F-1}`.
    pub fn to_csv(&self) -> String {
        let mut out = default_meta(self.cols).join(",");
        out.push('\n');
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::ShapeMismatch("empty CSV".into()))?;
        let cols = header.split(',').count();
        let mut values = Vec::new();
        let mut rows = 0;
        for (ln, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::ShapeMismatch(format!("line {}: {e}", ln + 2)))?;
            if row.len() != cols {
                return Err(Error::ShapeMismatch(format!(
                    "line {} has {} fields, header has {cols}",
                    ln + 2,
                    row.len()
                )));
            }
            values.extend(row);
            rows += 1;
        }
        Self::new(rows, cols, values, default_meta(cols))
    }

    const MAGIC: &'static [u8; 8] = b"SPRCFM01";

    /// Compact little-endian binary form: magic, rows, cols, column labels as
    /// a JSON array, then the values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let meta = serde_json::to_vec(&self.col_meta).expect("strings serialize");
        let mut out = Vec::with_capacity(32 + meta.len() + 8 * self.values.len());
        out.extend_from_slice(Self::MAGIC);
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.cols as u64).to_le_bytes());
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |why: &str| Error::ShapeMismatch(format!("feature cache: {why}"));
        if bytes.len() < 32 || &bytes[..8] != Self::MAGIC {
            return Err(bad("bad header"));
        }
        let word = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()) as usize;
        let (rows, cols, meta_len) = (word(8), word(16), word(24));
        let data_start = 32 + meta_len;
        if bytes.len() != data_start + 8 * rows * cols {
            return Err(bad("length does not match header"));
        }
        let col_meta: Vec<String> = serde_json::from_slice(&bytes[32..data_start])?;
        let values = bytes[data_start..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(rows, cols, values, col_meta)
    }
}

pub fn default_meta(cols: usize) -> Vec<String> {
    (0..cols).map(|j| format!("col_{j}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_shapes_and_non_finite() {
        assert!(FeatureMatrix::new(2, 2, vec![0.0; 3], default_meta(2)).is_err());
        assert!(FeatureMatrix::new(1, 2, vec![0.0, f64::NAN], default_meta(2)).is_err());
        assert!(FeatureMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn csv_header() {
        let m = FeatureMatrix::from_rows(&[vec![1.0, 2.5], vec![-3.0, 0.0]]).unwrap();
        let csv = m.to_csv();
        assert!(csv.starts_with("col_0,col_1\n"));
        assert_eq!(FeatureMatrix::from_csv(&csv).unwrap(), m);
    }

    proptest! {
        #[test]
        fn binary_round_trip(rows in 0usize..6, cols in 1usize..5, seed in any::<u64>()) {
            let values: Vec<f64> = (0..rows * cols)
                .map(|i| ((seed.wrapping_mul(i as u64 + 1)) % 1000) as f64 / 7.0 - 50.0)
                .collect();
            let meta: Vec<String> = (0..cols).map(|j| format!("node_{j}")).collect();
            let m = FeatureMatrix::new(rows, cols, values, meta).unwrap();
            prop_assert_eq!(FeatureMatrix::from_bytes(&m.to_bytes()).unwrap(), m.clone());
            let parsed = FeatureMatrix::from_csv(&m.to_csv()).unwrap();
            prop_assert_eq!(parsed.values(), m.values());
        }
    }
}
