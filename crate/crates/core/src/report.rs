//! Tabular output shared by all experiments.

use std::io;
use std::path::Path;

use serde::Serialize;

/// A CSV table with a fixed column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Prepend a constant column (e.g. the run index) to every row.
    pub fn with_leading_column(&self, name: &str, value: &str) -> Table {
        let mut t = Table::new(&[name]);
        t.header.extend(self.header.iter().cloned());
        for r in &self.rows {
            let mut row = vec![value.to_owned()];
            row.extend(r.iter().cloned());
            t.rows.push(row);
        }
        t
    }

    pub fn append(&mut self, other: &Table) {
        debug_assert_eq!(self.header, other.header);
        self.rows.extend(other.rows.iter().cloned());
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_csv_bytes())
    }
}

/// Shortest round-trip decimal form, `.` as separator; non-finite values
/// print as `inf`, `-inf` or `nan`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}
