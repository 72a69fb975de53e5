//! Row-major data matrices with a distinguished missing marker (IEEE NaN).
//!
//! Missing cells drive marginal queries, MPE completion and conditional
//! sampling: a missing cell means "marginalize / complete this variable".

use crate::error::{Error, Result};

/// The missing-value marker. Cells compare as missing via [`is_missing`].
pub const MISSING: f64 = f64::NAN;

/// True if a cell holds the missing marker.
#[inline]
pub fn is_missing(value: f64) -> bool {
    value.is_nan()
}

/// Dense row-major matrix of real values.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    /// A rows x cols matrix with every cell missing.
    pub fn filled_missing(rows: usize, cols: usize) -> Self {
        DataMatrix {
            rows,
            cols,
            values: vec![MISSING; rows * cols],
        }
    }

    /// Build from row vectors; all rows must have the same length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Data(format!(
                    "row {}: expected {} cells, found {}",
                    i,
                    cols,
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(DataMatrix {
            rows: rows.len(),
            cols,
            values,
        })
    }

    /// Single-row matrix.
    pub fn from_row(row: &[f64]) -> Self {
        DataMatrix {
            rows: 1,
            cols: row.len(),
            values: row.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols.max(1))
    }

    /// The whole template repeated `times` in row-block order.
    pub fn tiled(&self, times: usize) -> DataMatrix {
        let mut values = Vec::with_capacity(self.values.len() * times);
        for _ in 0..times {
            values.extend_from_slice(&self.values);
        }
        DataMatrix {
            rows: self.rows * times,
            cols: self.cols,
            values,
        }
    }

    /// Column values restricted to the given rows.
    pub fn column_subset(&self, rows: &[usize], col: usize) -> Vec<f64> {
        rows.iter().map(|&r| self.get(r, col)).collect()
    }

    /// True if any cell in the matrix is missing.
    pub fn has_missing(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }
}
