use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;

/// Column delimiter of the data files.
pub const DELIMITER: u8 = b',';

/// Shortest representation that parses back to the identical `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

/// One table cell. Missing values are empty.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Opt(Option<f64>),
    Bool(bool),
    Int(usize),
    Text(String),
}

impl Field {
    pub fn render(&self) -> String {
        match self {
            Field::Num(x) | Field::Opt(Some(x)) => format_f64(*x),
            Field::Opt(None) => String::new(),
            Field::Bool(b) => b.to_string(),
            Field::Int(n) => n.to_string(),
            Field::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Num(x)
    }
}

impl From<Option<f64>> for Field {
    fn from(x: Option<f64>) -> Self {
        Field::Opt(x)
    }
}

impl From<bool> for Field {
    fn from(b: bool) -> Self {
        Field::Bool(b)
    }
}

impl From<usize> for Field {
    fn from(n: usize) -> Self {
        Field::Int(n)
    }
}

impl From<&str> for Field {
    fn from(s: &str) -> Self {
        Field::Text(s.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Field>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().delimiter(DELIMITER).from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Field::render))?;
        }
        out.flush()?;
        Ok(())
    }
}

pub trait SummaryValue {
    fn render(self) -> String;
}

impl SummaryValue for f64 {
    fn render(self) -> String {
        format_f64(self)
    }
}

impl SummaryValue for &f64 {
    fn render(self) -> String {
        format_f64(*self)
    }
}

impl SummaryValue for bool {
    fn render(self) -> String {
        self.to_string()
    }
}

impl SummaryValue for usize {
    fn render(self) -> String {
        self.to_string()
    }
}

impl SummaryValue for String {
    fn render(self) -> String {
        self
    }
}

impl SummaryValue for &str {
    fn render(self) -> String {
        self.to_string()
    }
}

/// Result of one command: ordered key/value lines and an optional table.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub summary: Vec<(String, String)>,
    pub table: Option<Table>,
}

impl Report {
    pub fn line(&mut self, key: impl Into<String>, value: impl SummaryValue) {
        self.summary.push((key.into(), value.render()));
    }

    pub fn write_summary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (k, v) in &self.summary {
            writeln!(w, "{k}\t{v}")?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    delimiter: String,
    columns: &'a [String],
    summary: BTreeMap<&'a str, &'a str>,
    config: &'a RunConfig,
}

pub fn sidecar_path(data: &Path) -> PathBuf {
    let mut s = data.as_os_str().to_owned();
    s.push(".meta.toml");
    PathBuf::from(s)
}

/// Writes the table to `path` and the metadata sidecar next to it.
pub fn write_files(path: &Path, command: &str, report: &Report, cfg: &RunConfig) -> Result<()> {
    let empty = Table::default();
    let table = report.table.as_ref().unwrap_or(&empty);
    table.write(std::io::BufWriter::new(std::fs::File::create(path)?))?;
    let meta = Metadata {
        tool: "qar",
        version: qar_core::VERSION,
        command,
        delimiter: (DELIMITER as char).to_string(),
        columns: &table.columns,
        summary: report.summary.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect(),
        config: cfg,
    };
    std::fs::write(sidecar_path(path), toml::to_string(&meta)?)?;
    Ok(())
}
