//! CSV ingestion and emission for numeric data with missing cells.
//!
//! Cells are comma-separated numbers; an empty cell or a case-insensitive
//! `nan` reads as the missing marker. Rows must be rectangular and all
//! values finite.

use std::io::BufRead;
use std::path::Path;

use crate::data::{DataMatrix, MISSING};
use crate::error::{Error, Result};

/// Read a data matrix from a CSV stream. With `has_header` the first line
/// is skipped (its cell count still fixes the expected width).
pub fn read_csv<R: BufRead>(reader: R, has_header: bool) -> Result<DataMatrix> {
    let mut expected_cols: Option<usize> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut data_row = 0usize;
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line_no == 0 && has_header {
            expected_cols = Some(line.split(',').count());
            continue;
        }
        if line.is_empty() && rows.is_empty() && expected_cols.is_none() {
            // leading blank lines
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        match expected_cols {
            None => expected_cols = Some(cells.len()),
            Some(n) if n != cells.len() => {
                return Err(Error::Data(format!(
                    "row {data_row}: expected {n} cells, found {}",
                    cells.len()
                )));
            }
            _ => {}
        }
        let mut row = Vec::with_capacity(cells.len());
        for (col, cell) in cells.iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
                row.push(MISSING);
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| {
                Error::Data(format!(
                    "row {data_row}, column {col}: non-numeric cell '{cell}'"
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::Data(format!(
                    "row {data_row}, column {col}: non-finite value '{cell}'"
                )));
            }
            row.push(value);
        }
        rows.push(row);
        data_row += 1;
    }
    if rows.is_empty() && expected_cols.is_none() {
        return Err(Error::Data("empty CSV input".into()));
    }
    DataMatrix::from_rows(rows)
}

/// Read a CSV file by path.
pub fn read_csv_path(path: &Path, has_header: bool) -> Result<DataMatrix> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file), has_header)
}

/// Render a matrix as CSV with the given decimal precision; missing cells
/// come out as `nan`.
pub fn write_csv(data: &DataMatrix, precision: usize) -> String {
    let mut out = String::new();
    for r in 0..data.rows() {
        let cells: Vec<String> = data
            .row(r)
            .iter()
            .map(|v| {
                if v.is_nan() {
                    "nan".to_string()
                } else {
                    format!("{v:.precision$}")
                }
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
