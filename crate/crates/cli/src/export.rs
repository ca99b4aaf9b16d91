//! CSV emission: header row, '.' decimals, 12 significant digits, and
//! optional `#` footer lines.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::CliError;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// A rectangular table of already formatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub footer: Vec<String>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "ragged table row");
        self.rows.push(row);
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.footer.push(line.into());
    }
}

/// Number rounded to [`SIGNIFICANT_DIGITS`] and printed in its shortest form.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses");
    let a = rounded.abs();
    if a != 0.0 && !(1e-6..1e15).contains(&a) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn emit_csv(table: &Table, path: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::io(path, e);
    let file = File::create(path).map_err(io)?;
    let mut out = BufWriter::new(file);
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
        let csv_err = |e: csv::Error| CliError::io(path, std::io::Error::other(e));
        w.write_record(&table.header).map_err(csv_err)?;
        for row in &table.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
    }
    for line in &table.footer {
        writeln!(out, "# {line}").map_err(io)?;
    }
    out.flush().map_err(io)
}
