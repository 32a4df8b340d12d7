use std::path::Path;

use corrt::linalg::Matrix;
use corrt::program::Dataset;

use crate::CliError;

/// A numeric table read from a headed CSV file.
#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let file = std::fs::File::open(path)
            .map_err(|e| CliError::data(format!("cannot open {}: {e}", path.display())))?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self, CliError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| CliError::data(format!("cannot read CSV header: {e}")))?
            .iter()
            .map(str::to_owned)
            .collect();
        if headers.is_empty() {
            return Err(CliError::data("CSV file has no columns"));
        }
        let mut rows = Vec::new();
        for (k, record) in rdr.records().enumerate() {
            // data rows are numbered from 1, the header is row 0
            let row_no = k + 1;
            let record = record.map_err(|e| CliError::data(format!("row {row_no}: {e}")))?;
            if record.len() != headers.len() {
                return Err(CliError::data(format!(
                    "row {row_no}: expected {} fields, found {}",
                    headers.len(),
                    record.len()
                )));
            }
            let mut row = Vec::with_capacity(headers.len());
            for (field, name) in record.iter().zip(&headers) {
                if field.is_empty() || field.eq_ignore_ascii_case("na") || field.eq_ignore_ascii_case("nan") {
                    return Err(CliError::data(format!("row {row_no}, column '{name}': missing value")));
                }
                let v: f64 = field.parse().map_err(|_| {
                    CliError::data(format!("row {row_no}, column '{name}': cannot parse '{field}' as a number"))
                })?;
                if !v.is_finite() {
                    return Err(CliError::data(format!("row {row_no}, column '{name}': non-finite value")));
                }
                row.push(v);
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(CliError::data("CSV file has no data rows"));
        }
        Ok(Self { headers, rows })
    }

    /// Resolve a column given by header name or by 0-based position.
    pub fn column_index(&self, key: &str) -> Result<usize, CliError> {
        if let Some(i) = self.headers.iter().position(|h| h == key) {
            return Ok(i);
        }
        match key.parse::<usize>() {
            Ok(i) if i < self.headers.len() => Ok(i),
            Ok(i) => Err(CliError::data(format!(
                "column index {i} out of range (file has {} columns)",
                self.headers.len()
            ))),
            Err(_) => Err(CliError::data(format!("no column named '{key}'"))),
        }
    }

    /// Response from `y_col`; W is every other column in file order.
    pub fn dataset(&self, y_col: &str, test_col: &str) -> Result<Dataset, CliError> {
        let yi = self.column_index(y_col)?;
        let ti = self.column_index(test_col)?;
        if yi == ti {
            return Err(CliError::data("response and tested column must differ"));
        }
        let keep: Vec<usize> = (0..self.headers.len()).filter(|&j| j != yi).collect();
        let tested = keep.iter().position(|&j| j == ti).expect("tested column is kept");
        let y: Vec<f64> = self.rows.iter().map(|r| r[yi]).collect();
        let w = Matrix::from_fn(self.rows.len(), keep.len(), |i, j| self.rows[i][keep[j]]);
        Ok(Dataset::new(y, w, tested)?)
    }
}
