//! Thin helpers over the `csv` crate for fixed-header tables.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use csv::StringRecord;

use crate::actuator::CellShape;
use crate::error::{Error, Result};

pub(crate) struct Row {
    pub line: usize,
    record: StringRecord,
    header: &'static [&'static str],
}

impl Row {
    fn cell(&self, column: &str) -> Result<&str> {
        let idx = self
            .header
            .iter()
            .position(|h| *h == column)
            .expect("column name is part of the fixed header");
        self.record.get(idx).map(str::trim).ok_or_else(|| Error::Parse {
            line: self.line,
            column: column.to_string(),
            message: "missing field".into(),
        })
    }

    fn err(&self, column: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: column.to_string(),
            message: message.into(),
        }
    }

    /// A finite floating-point field. NaN and infinities are rejected.
    pub fn f64(&self, column: &str) -> Result<f64> {
        let raw = self.cell(column)?;
        let value: f64 = raw
            .parse()
            .map_err(|_| self.err(column, format!("`{raw}` is not a number")))?;
        if !value.is_finite() {
            return Err(self.err(column, format!("`{raw}` is not finite")));
        }
        Ok(value)
    }

    pub fn u32(&self, column: &str) -> Result<u32> {
        let raw = self.cell(column)?;
        raw.parse()
            .map_err(|_| self.err(column, format!("`{raw}` is not a non-negative integer")))
    }

    pub fn shape(&self, column: &str) -> Result<CellShape> {
        let raw = self.cell(column)?;
        raw.parse().map_err(|e: Error| self.err(column, e.to_string()))
    }

    pub fn str(&self, column: &str) -> Result<&str> {
        self.cell(column)
    }
}

/// Reads every row of a CSV document whose header must equal `header` exactly.
pub(crate) fn read_rows<R: Read>(reader: R, header: &'static [&'static str]) -> Result<Vec<Row>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let found = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
    if found.is_empty() || (found.len() == 1 && found[0].trim().is_empty()) {
        return Err(Error::Parse {
            line: 1,
            column: String::new(),
            message: "empty file".into(),
        });
    }
    let found_names: Vec<&str> = found.iter().map(str::trim).collect();
    if found_names != header {
        return Err(Error::Parse {
            line: 1,
            column: String::new(),
            message: format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found_names.join(",")
            ),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line_guess = i + 2;
        let record = rec.map_err(|e| csv_error(e, line_guess))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(line_guess);
        rows.push(Row { line, record, header });
    }
    Ok(rows)
}

pub(crate) fn read_rows_from_path(path: &Path, header: &'static [&'static str]) -> Result<Vec<Row>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_rows(file, header)
}

fn csv_error(e: csv::Error, line: usize) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(line);
    Error::Parse {
        line,
        column: String::new(),
        message: e.to_string(),
    }
}

pub(crate) fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(contents).map_err(|e| Error::io(path, e))
}
