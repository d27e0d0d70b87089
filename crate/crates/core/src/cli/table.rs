//! CSV tables written by the command line tool, and the reader used to replay them.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    /// Floats carry 9 significant digits.
    pub fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else {
        x.to_string()
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

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write_to(&self, w: impl Write) -> Result<()> {
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.headers).map_err(io)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::render)).map_err(io)?;
        }
        out.flush().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    /// Checks that `parsed` (a re-read copy of this table) reproduces every
    /// value to the written precision.
    pub fn matches_replay(&self, parsed: &CsvData) -> std::result::Result<(), String> {
        if parsed.headers != self.headers {
            return Err(format!("header mismatch: {:?} vs {:?}", parsed.headers, self.headers));
        }
        if parsed.rows.len() != self.rows.len() {
            return Err(format!("{} rows read back, {} written", parsed.rows.len(), self.rows.len()));
        }
        for (i, (orig, back)) in self.rows.iter().zip(&parsed.rows).enumerate() {
            for (j, (cell, text)) in orig.iter().zip(back).enumerate() {
                let ok = match cell {
                    Cell::Float(x) if x.is_finite() => text
                        .parse::<f64>()
                        .is_ok_and(|y| (y - x).abs() <= 1e-8 * x.abs()),
                    _ => *text == cell.render(),
                };
                if !ok {
                    return Err(format!("row {} column `{}` reads back as `{text}`", i + 1, self.headers[j]));
                }
            }
        }
        Ok(())
    }
}

/// A CSV file as header plus string fields.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvData {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvData {
    pub fn parse(text: &str) -> Result<Self> {
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let headers = reader.headers().map_err(io)?.iter().map(String::from).collect();
        let rows = reader
            .records()
            .map(|r| r.map(|rec| rec.iter().map(String::from).collect()).map_err(io))
            .collect::<Result<Vec<Vec<String>>>>()?;
        Ok(Self { headers, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// Numeric column; empty fields become `None`.
    pub fn floats(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let j = self
            .column(name)
            .ok_or_else(|| Error::Io(format!("no column `{name}`")))?;
        self.rows
            .iter()
            .map(|r| {
                let s = r[j].as_str();
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<f64>()
                        .map(Some)
                        .map_err(|_| Error::Io(format!("`{s}` in column `{name}` is not a number")))
                }
            })
            .collect()
    }
}
