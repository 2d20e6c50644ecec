//! CSV ingestion/export and the bundled reference dataset.
//!
//! Dialect: UTF-8, header row, comma separator, point decimal.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::Dataset;

/// Portland cement data (Woods, Steinour and Starke, 1932), 13 observations.
///
/// X2 tricalcium aluminate, X3 tricalcium silicate, X4 tetracalcium
/// aluminoferrite, X5 β-dicalcium silicate, Y heat evolved (cal/g).
pub const CEMENT_CSV: &str = include_str!("../data/cement.csv");

pub const BUNDLED: &[&str] = &["cement"];

pub fn cement() -> Dataset {
    parse_csv(CEMENT_CSV, "Y").expect("bundled cement data is valid")
}

/// Bundled dataset by name, if one exists.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "cement" => Some(CEMENT_CSV),
        _ => None,
    }
}

pub fn load_csv(path: impl AsRef<Path>, response: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_csv(&text, response)
}

/// Parse CSV text; every column other than `response` becomes a regressor, in file order.
pub fn parse_csv(text: &str, response: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::EmptyData);
    }
    let response_col = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| Error::MissingColumn(response.to_string()))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record.map_err(|e| csv_error(e, line))?;
        let mut row = Vec::with_capacity(headers.len());
        for (j, field) in record.iter().enumerate() {
            let field = field.trim();
            let column = headers[j].clone();
            if field.is_empty() {
                return Err(Error::Parse {
                    line,
                    column,
                    message: "empty cell".into(),
                });
            }
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                column: column.clone(),
                message: format!("`{field}` is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line,
                    column,
                    message: format!("`{field}` is not finite"),
                });
            }
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyData);
    }

    let n = rows.len();
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != response_col)
        .map(|(_, h)| h.clone())
        .collect();
    let regressor_cols: Vec<usize> = (0..headers.len()).filter(|&j| j != response_col).collect();
    let regressors = DMatrix::from_fn(n, regressor_cols.len(), |r, c| rows[r][regressor_cols[c]]);
    let y = DVector::from_fn(n, |r, _| rows[r][response_col]);
    Dataset::new(names, regressors, response, y)
}

fn csv_error(e: csv::Error, line: usize) -> Error {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(line);
    Error::Parse {
        line,
        column: String::new(),
        message: e.to_string(),
    }
}

/// Render a dataset as CSV (regressors, then response). Values use the
/// shortest representation that parses back to the same `f64`.
pub fn to_csv(dataset: &Dataset) -> String {
    let mut out = String::new();
    let header: Vec<&str> = dataset
        .names()
        .iter()
        .map(String::as_str)
        .chain(std::iter::once(dataset.response_name()))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..dataset.n() {
        let mut fields: Vec<String> = dataset.regressors().row(r).iter().map(|v| format!("{v}")).collect();
        fields.push(format!("{}", dataset.response()[r]));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_cement_shape() {
        let ds = cement();
        assert_eq!(ds.n(), 13);
        assert_eq!(ds.p(), 5);
        assert_eq!(ds.names(), &["X2", "X3", "X4", "X5"]);
    }

    #[test]
    fn blank_cell_is_located() {
        let err = parse_csv("a,b,y\n1,2,3\n4,,6\n7,8,9\n1,1,1\n", "y").unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn headers_only_is_empty() {
        assert_eq!(parse_csv("a,b,y\n", "y").unwrap_err(), Error::EmptyData);
    }

    #[test]
    fn unknown_response_column() {
        assert!(matches!(parse_csv("a,y\n1,2\n", "z"), Err(Error::MissingColumn(_))));
    }

    #[test]
    fn non_numeric_cell() {
        let err = parse_csv("a,y\n1,2\nx,3\n2,2\n", "y").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn ragged_row_is_rejected() {
        assert!(matches!(parse_csv("a,y\n1,2\n3\n", "y"), Err(Error::Parse { .. })));
    }
}
