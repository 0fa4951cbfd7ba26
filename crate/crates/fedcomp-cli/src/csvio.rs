//! CSV import/export for time series. Rows are time steps, columns are
//! features.

use std::path::Path;

use fedcomp::series::TimeSeries;

use crate::config::CsvSource;
use crate::error::{CliError, CliResult};

/// Load a series from CSV. Non-numeric or NaN cells and ragged rows are
/// reported with 1-based row and column positions.
pub fn load_csv(src: &CsvSource) -> CliResult<TimeSeries> {
    let path = Path::new(&src.path);
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(src.delimiter as u8)
        .has_headers(src.has_header)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Validation(format!("cannot open {}: {e}", src.path)))?;

    let mut names: Vec<String> = Vec::new();
    if src.has_header {
        let headers = reader
            .headers()
            .map_err(|e| CliError::Validation(format!("{}: bad header: {e}", src.path)))?;
        names = headers.iter().map(|h| h.to_string()).collect();
    }

    // column-count from the first record; time-major rows collected first
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut d = 0usize;
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1 + usize::from(src.has_header);
        let record = record
            .map_err(|e| CliError::Validation(format!("{}: row {row_no}: {e}", src.path)))?;
        if rows.is_empty() && d == 0 {
            d = record.len();
        }
        if record.len() != d {
            return Err(CliError::Validation(format!(
                "{}: row {row_no}: expected {d} columns, got {}",
                src.path,
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(d);
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                CliError::Validation(format!(
                    "{}: row {row_no}, column {}: not a number: {cell:?}",
                    src.path,
                    j + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Validation(format!(
                    "{}: row {row_no}, column {}: non-finite value {cell:?}",
                    src.path,
                    j + 1
                )));
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() || d == 0 {
        return Err(CliError::Validation(format!("{}: no data rows", src.path)));
    }
    if names.len() != d {
        names = (0..d).map(|f| format!("f{f}")).collect();
    }

    // transpose into feature-major storage
    let t = rows.len();
    let mut values = vec![0.0; d * t];
    for (step, row) in rows.iter().enumerate() {
        for (f, &v) in row.iter().enumerate() {
            values[f * t + step] = v;
        }
    }
    let ts = TimeSeries::new(values, d, t, names).map_err(|e| CliError::Validation(e.to_string()))?;
    match &src.features {
        Some(subset) => ts
            .select_features(subset)
            .map_err(|e| CliError::Validation(e.to_string())),
        None => Ok(ts),
    }
}

/// Write a series as CSV (header row of feature names, one row per step).
pub fn write_csv(ts: &TimeSeries, path: &Path) -> CliResult<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer
        .write_record(&ts.feature_names)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    for step in 0..ts.num_steps() {
        let row: Vec<String> =
            (0..ts.num_features()).map(|f| format!("{}", ts.value(f, step))).collect();
        writer.write_record(&row).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}
