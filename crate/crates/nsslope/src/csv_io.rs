//! Plain CSV matrix files: row-major, '.' decimal separator, UTF-8,
//! no header by default. Floats are written with 17 significant digits so
//! a read-back is bit-exact.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Format a float with 17 significant digits (round-trip exact for f64).
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Read a numeric matrix from CSV. With `has_header` the first line is
/// skipped. All rows must have the same width; entries must be finite.
pub fn read_matrix_csv(path: &Path, has_header: bool) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::CsvParse {
            line: 0,
            message: e.to_string(),
        })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1 + usize::from(has_header);
        let record = record.map_err(|e| Error::CsvParse {
            line,
            message: e.to_string(),
        })?;
        let mut row = Vec::with_capacity(record.len());
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| Error::CsvParse {
                line,
                message: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::CsvParse {
                    line,
                    message: format!("non-finite value: {field:?}"),
                });
            }
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::CsvParse {
                    line,
                    message: format!("expected {w} fields, got {}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    let ncols = width.ok_or_else(|| Error::EmptyInput("csv matrix has no rows".into()))?;
    let nrows = rows.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| Error::DimensionMismatch(e.to_string()))
}

/// Write a matrix as CSV. `header` optionally names the columns.
pub fn write_matrix_csv(path: &Path, m: &Array2<f64>, header: Option<&[String]>) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    if let Some(names) = header {
        writeln!(w, "{}", names.join(","))?;
    }
    let mut line = String::new();
    for row in m.rows() {
        line.clear();
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&format_float(*v));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}
