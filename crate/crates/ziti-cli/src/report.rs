//! CSV tables.

use std::io::Write;
use std::path::Path;

use crate::CliError;

/// Name of the column dropped in deterministic output.
pub const WALL_COLUMN: &str = "wall_s";

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Int(usize),
    Num(f64),
    Text(String),
    Missing,
}

impl Field {
    pub fn num_opt(v: Option<f64>) -> Self {
        v.map_or(Field::Missing, Field::Num)
    }

    pub fn render(&self) -> String {
        match self {
            Field::Int(v) => v.to_string(),
            Field::Num(v) => format_num(*v),
            Field::Text(s) => s.clone(),
            Field::Missing => String::new(),
        }
    }
}

/// Scientific notation with 15 significant digits.
pub fn format_num(v: f64) -> String {
    format!("{v:.14e}")
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field::Int(v)
    }
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Num(v)
    }
}

impl From<&str> for Field {
    fn from(v: &str) -> Self {
        Field::Text(v.to_string())
    }
}

impl From<String> for Field {
    fn from(v: String) -> Self {
        Field::Text(v)
    }
}

/// Rows under a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct TableReport {
    /// Identifier of the table layout, e.g. `poisson-cartesian`.
    pub table: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Field>>,
}

impl TableReport {
    pub fn new(table: &str, columns: &[&str]) -> Self {
        Self {
            table: table.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.table);
        self.rows.push(row);
    }

    pub fn without_column(mut self, name: &str) -> Self {
        if let Some(k) = self.columns.iter().position(|c| c == name) {
            self.columns.remove(k);
            for row in &mut self.rows {
                row.remove(k);
            }
        }
        self
    }

    /// Non-finite numbers in a row.
    pub fn check_finite(&self) -> Result<(), CliError> {
        for row in &self.rows {
            for (c, f) in self.columns.iter().zip(row) {
                if let Field::Num(v) = f {
                    if !v.is_finite() {
                        return Err(CliError::Numerical(format!("column {c} is not finite")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, out: W, stamp: Option<&str>) -> Result<(), CliError> {
        let mut out = out;
        if let Some(s) = stamp {
            writeln!(out, "# {s}").map_err(io_err)?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Field::render)).map_err(csv_err)?;
        }
        w.flush().map_err(io_err)
    }

    /// Writes to `path`, or to standard output when `path` is `None`.
    pub fn emit(&self, path: Option<&Path>, stamp: Option<&str>) -> Result<(), CliError> {
        match path {
            Some(p) => {
                let f = std::fs::File::create(p)
                    .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                self.write_to(std::io::BufWriter::new(f), stamp)
            }
            None => self.write_to(std::io::stdout().lock(), stamp),
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Reads a table written by [`TableReport::write_to`], skipping `#` lines.
#[cfg(test)]
pub fn read_table<R: std::io::Read>(input: R) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let header = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(csv_err)?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}
