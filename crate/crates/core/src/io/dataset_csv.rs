//! Dataset CSV: a header row, a response column named `y` whose missing
//! entries are empty or `NA`/`NaN`, and covariate columns in header order.
//! Values are written with full round-trip precision so a write/read cycle
//! is lossless.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use std::io::{Read, Write};

/// Parsed dataset file: the response with missing slots plus the covariate
/// block and its column names (intercept not included).
#[derive(Debug, Clone)]
pub struct DatasetCsv {
    pub y: Vec<Option<f64>>,
    pub covariates: DenseMatrix,
    pub covariate_names: Vec<String>,
}

impl DatasetCsv {
    /// The design matrix, optionally with a leading intercept column.
    pub fn design(&self, intercept: bool) -> DenseMatrix {
        let n = self.y.len();
        let p = self.covariates.ncols();
        if !intercept {
            return self.covariates.clone();
        }
        let mut x = DenseMatrix::zeros(n, p + 1);
        for i in 0..n {
            x.set(i, 0, 1.0);
        }
        for j in 0..p {
            let src = self.covariates.col(j);
            x.col_mut(j + 1).copy_from_slice(src);
        }
        x
    }
}

fn is_missing_marker(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan")
}

pub fn read_dataset_csv<R: Read>(reader: R) -> Result<DatasetCsv> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    let y_col = headers
        .iter()
        .position(|h| h == "y")
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: "no column named 'y' in header".to_string(),
        })?;
    let covariate_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != y_col)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut y = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let line_no = idx + 2; // header is line 1
        let record = record.map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!(
                    "expected {} fields, found {}",
                    headers.len(),
                    record.len()
                ),
            });
        }
        let y_field = &record[y_col];
        if is_missing_marker(y_field) {
            y.push(None);
        } else {
            let v: f64 = y_field.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad response value '{y_field}'"),
            })?;
            y.push(Some(v));
        }
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (i, field) in record.iter().enumerate() {
            if i == y_col {
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad covariate value '{field}' in column '{}'", &headers[i]),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    let covariates = DenseMatrix::from_rows(&rows)?;
    Ok(DatasetCsv {
        y,
        covariates,
        covariate_names,
    })
}

/// Write a dataset file with the response first: missing responses as empty
/// fields, all values in shortest round-trip decimal form.
pub fn write_dataset_csv<W: Write>(
    writer: W,
    y: &[Option<f64>],
    covariates: &DenseMatrix,
    covariate_names: &[String],
) -> Result<()> {
    if covariates.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "covariate rows vs response length",
            expected: y.len(),
            got: covariates.nrows(),
        });
    }
    if covariate_names.len() != covariates.ncols() {
        return Err(Error::DimensionMismatch {
            context: "covariate names vs columns",
            expected: covariates.ncols(),
            got: covariate_names.len(),
        });
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["y".to_string()];
    header.extend_from_slice(covariate_names);
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..y.len() {
        let mut record = Vec::with_capacity(header.len());
        record.push(match y[i] {
            Some(v) => format!("{v}"),
            None => String::new(),
        });
        for j in 0..covariates.ncols() {
            record.push(format!("{}", covariates.get(i, j)));
        }
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv write failed: {e}"))
}
