//! Rectangular result tables and their CSV form.
//!
//! A CSV file starts with `# key=value` metadata lines, then a header row,
//! then one line per row. Fields are comma-separated, decimals use `.`,
//! lines end in LF. Floats are written in the shortest form that reads
//! back to the same bits, so equal tables give equal bytes.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::error::ToolError;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    /// Written as an empty field.
    Missing,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Float(x) => write!(f, "{}", format_float(*x)),
            Cell::Text(s) => f.write_str(s),
            Cell::Missing => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Float)
    }
}

impl Cell {
    /// Reads a field back: integer, then float, then text.
    pub fn parse(field: &str) -> Cell {
        if field.is_empty() {
            Cell::Missing
        } else if let Ok(i) = field.parse::<i64>() {
            Cell::Int(i)
        } else if let Ok(x) = field.parse::<f64>() {
            Cell::Float(x)
        } else {
            Cell::Text(field.to_string())
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Float(x) => Some(*x),
            _ => None,
        }
    }
}

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x != 0.0 && x.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: BTreeMap<String, String>,
}

impl ResultTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        ResultTable {
            columns: columns.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    /// Appends a row; the width must match the header.
    pub fn push(&mut self, row: Vec<Cell>) -> Result<(), ToolError> {
        if row.len() != self.columns.len() {
            return Err(ToolError::Format(format!(
                "row has {} fields, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of a numeric column; `None` cells become NaN.
    pub fn numeric_column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| r[k].as_f64().unwrap_or(f64::NAN))
                .collect(),
        )
    }

    pub fn to_csv(&self) -> Result<String, ToolError> {
        let mut out = Vec::new();
        for (k, v) in &self.metadata {
            if k.contains(['=', '\n']) || v.contains('\n') {
                return Err(ToolError::Format(format!("metadata entry `{k}` cannot be written")));
            }
            out.extend_from_slice(format!("# {k}={v}\n").as_bytes());
        }
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut out);
            w.write_record(&self.columns).map_err(csv_error)?;
            for row in &self.rows {
                w.write_record(row.iter().map(Cell::to_string)).map_err(csv_error)?;
            }
            w.flush().map_err(|e| ToolError::Format(e.to_string()))?;
        }
        String::from_utf8(out).map_err(|e| ToolError::Format(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self, ToolError> {
        let mut metadata = BTreeMap::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let entry = line.trim_start_matches('#').trim_start();
            if let Some((k, v)) = entry.split_once('=') {
                metadata.insert(k.to_string(), v.to_string());
            }
        }
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let columns = r
            .headers()
            .map_err(csv_error)?
            .iter()
            .map(str::to_string)
            .collect();
        let mut table = ResultTable {
            columns,
            rows: Vec::new(),
            metadata,
        };
        for record in r.records() {
            let record = record.map_err(csv_error)?;
            table.push(record.iter().map(Cell::parse).collect())?;
        }
        Ok(table)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), ToolError> {
        let text = self.to_csv()?;
        std::fs::write(path, text).map_err(|e| ToolError::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self, ToolError> {
        let text = std::fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
        Self::from_csv(&text)
    }
}

fn csv_error(e: csv::Error) -> ToolError {
    ToolError::Format(e.to_string())
}
