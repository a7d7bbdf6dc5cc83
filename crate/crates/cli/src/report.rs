//! Tabular command output. Numbers are written in base units with Rust's
//! locale-independent formatting so that identical inputs give identical
//! bytes.

use std::fmt::Write as _;

use serde_json::json;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Emit {
    /// CSV rows preceded by a `#` comment line naming the columns.
    GnuplotData,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Float(v) => v.to_string(),
            Self::Text(s) => s.clone(),
            Self::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Self::Int(v) => json!(v),
            Self::Float(v) => json!(v),
            Self::Text(s) => json!(s),
            Self::Empty => serde_json::Value::Null,
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Self::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Self::Text(v)
    }
}

/// Accumulates the bytes that identify a command's inputs.
#[derive(Default)]
pub struct Digest256(Sha256);

impl Digest256 {
    pub fn update(&mut self, label: &str, bytes: &[u8]) {
        self.0.update((label.len() as u64).to_le_bytes());
        self.0.update(label.as_bytes());
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

pub struct Report {
    pub command: String,
    pub inputs_digest: String,
    pub invocation: Vec<String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(command: &str, columns: Vec<&'static str>) -> Self {
        Self {
            command: command.to_string(),
            inputs_digest: String::new(),
            invocation: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format, emit: Option<Emit>) -> String {
        match (format, emit) {
            (_, Some(Emit::GnuplotData)) => {
                let mut out = format!("# {}\n", self.columns.join(" "));
                self.write_csv_rows(&mut out);
                out
            }
            (Format::Csv, None) => {
                let mut out = self.columns.join(",");
                out.push('\n');
                self.write_csv_rows(&mut out);
                out
            }
            (Format::Json, None) => {
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| serde_json::Value::Array(row.iter().map(Cell::json).collect()))
                    .collect();
                let doc = json!({
                    "command": self.command,
                    "inputs_digest": self.inputs_digest,
                    "invocation": self.invocation,
                    "columns": self.columns,
                    "rows": rows,
                });
                let mut out = serde_json::to_string_pretty(&doc).expect("report serializes");
                out.push('\n');
                out
            }
        }
    }

    fn write_csv_rows(&self, out: &mut String) {
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| csv_field(&c.render())).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("test", vec!["name", "n", "x"]);
        r.push(vec!["a,b".into(), 3u64.into(), 0.5f64.into()]);
        r.push(vec!["c".into(), Cell::Empty, 1e-9f64.into()]);
        r
    }

    #[test]
    fn csv_quotes_and_formats() {
        assert_eq!(sample().render(Format::Csv, None), "name,n,x\n\"a,b\",3,0.5\nc,,0.000000001\n");
    }

    #[test]
    fn gnuplot_header_is_comment() {
        let out = sample().render(Format::Csv, Some(Emit::GnuplotData));
        assert!(out.starts_with("# name n x\n\"a,b\""));
    }

    #[test]
    fn json_keeps_column_order() {
        let out = sample().render(Format::Json, None);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["columns"], json!(["name", "n", "x"]));
        assert_eq!(v["rows"][1][1], serde_json::Value::Null);
    }

    #[test]
    fn digest_separates_fields() {
        let mut a = Digest256::default();
        a.update("ab", b"c");
        let mut b = Digest256::default();
        b.update("a", b"bc");
        assert_ne!(a.finish(), b.finish());
    }
}
