//! CSV and JSON writers.
//!
//! Every CSV table starts with a comment line
//! `# fpqsim/1 <command> <table>`, then optional `# key=value` metadata
//! lines, then the header row. Floats use 17 significant digits.
//!
//! Every JSON document is an object with `"schema": "fpqsim/1"`, the command
//! name, scalar metadata, and one object of column arrays per table.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::args::Format;

pub const SCHEMA: &str = "fpqsim/1";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Self::Float(v) => format_float(*v),
            Self::Int(v) => v.to_string(),
            Self::Bool(v) => u8::from(*v).to_string(),
            Self::Text(s) => quote(s),
        }
    }

    fn json(&self) -> Value {
        match self {
            Self::Float(v) => float_value(*v),
            Self::Int(v) => Value::from(*v),
            Self::Bool(v) => Value::from(*v),
            Self::Text(s) => Value::from(s.as_str()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::Bool(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::Text(v.to_owned())
    }
}

/// Round-trippable scientific notation with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn float_value(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Written as a CSV file only; its values already appear in JSON metadata.
    pub csv_only: bool,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_owned(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            csv_only: false,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn write_csv(
        &self,
        w: &mut impl Write,
        command: &str,
        meta: &[(String, Value)],
    ) -> io::Result<()> {
        writeln!(w, "# {SCHEMA} {command} {}", self.name)?;
        for (k, v) in meta {
            writeln!(w, "# {k}={}", meta_text(v))?;
        }
        writeln!(
            w,
            "{}",
            self.columns
                .iter()
                .map(|c| quote(c))
                .collect::<Vec<_>>()
                .join(",")
        )?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    fn json(&self) -> Value {
        let mut obj = Map::new();
        for (c, name) in self.columns.iter().enumerate() {
            let col: Vec<Value> = self.rows.iter().map(|r| r[c].json()).collect();
            obj.insert(name.clone(), Value::Array(col));
        }
        Value::Object(obj)
    }
}

fn meta_text(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => n.as_f64().map_or_else(|| n.to_string(), format_float),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(meta_text).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

/// One output document: a JSON object, or a group of CSV tables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Section {
    /// Distinguishes sibling files, e.g. `eps0.4`.
    pub suffix: Option<String>,
    pub meta: Vec<(String, Value)>,
    pub tables: Vec<Table>,
}

impl Section {
    pub fn meta(&mut self, key: &str, value: impl Into<Value>) {
        self.meta.push((key.to_owned(), value.into()));
    }

    pub fn meta_f64(&mut self, key: &str, value: f64) {
        self.meta.push((key.to_owned(), float_value(value)));
    }

    pub fn meta_f64s(&mut self, key: &str, values: &[f64]) {
        let arr = values.iter().map(|&v| float_value(v)).collect();
        self.meta.push((key.to_owned(), Value::Array(arr)));
    }

    fn json(&self, command: &str) -> Value {
        let mut obj = Map::new();
        obj.insert("schema".into(), SCHEMA.into());
        obj.insert("command".into(), command.into());
        for (k, v) in &self.meta {
            obj.insert(k.clone(), v.clone());
        }
        for t in self.tables.iter().filter(|t| !t.csv_only) {
            obj.insert(t.name.clone(), t.json());
        }
        Value::Object(obj)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub sections: Vec<Section>,
}

impl Report {
    pub fn single(command: &'static str, section: Section) -> Self {
        Self {
            command,
            sections: vec![section],
        }
    }
}

fn sibling(path: &Path, parts: &[&str], ext: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut name = stem;
    for p in parts {
        name.push('.');
        name.push_str(p);
    }
    name.push('.');
    name.push_str(ext);
    path.with_file_name(name)
}

/// Writes `report` to `out`, or to `stdout` when `out` is `None`.
///
/// A file path names the only document directly. With several documents
/// the path's stem is extended to `<stem>.<suffix>.<table>.<ext>`.
/// Returns the files written.
pub fn write_report(
    report: &Report,
    out: Option<&Path>,
    format: Format,
    stdout: &mut impl Write,
) -> io::Result<Vec<PathBuf>> {
    match (out, format) {
        (None, Format::Json) => {
            let docs: Vec<Value> = report
                .sections
                .iter()
                .map(|s| s.json(report.command))
                .collect();
            let doc = if docs.len() == 1 {
                docs.into_iter().next().unwrap()
            } else {
                Value::Array(docs)
            };
            writeln!(stdout, "{}", serde_json::to_string_pretty(&doc)?)?;
            Ok(Vec::new())
        }
        (None, Format::Csv) => {
            let mut first = true;
            for s in &report.sections {
                for t in &s.tables {
                    if !first {
                        writeln!(stdout)?;
                    }
                    first = false;
                    t.write_csv(stdout, report.command, &s.meta)?;
                }
            }
            Ok(Vec::new())
        }
        (Some(path), Format::Json) => {
            let many = report.sections.len() > 1;
            let mut written = Vec::new();
            for s in &report.sections {
                let target = match (&s.suffix, many) {
                    (Some(suffix), true) => sibling(path, &[suffix], "json"),
                    _ => path.to_path_buf(),
                };
                let text = serde_json::to_string_pretty(&s.json(report.command))?;
                fs::write(&target, text + "\n")?;
                written.push(target);
            }
            Ok(written)
        }
        (Some(path), Format::Csv) => {
            let many_sections = report.sections.len() > 1;
            let mut written = Vec::new();
            for s in &report.sections {
                let many_tables = s.tables.len() > 1;
                for t in &s.tables {
                    let mut parts = Vec::new();
                    if many_sections {
                        if let Some(suffix) = &s.suffix {
                            parts.push(suffix.as_str());
                        }
                    }
                    if many_tables {
                        parts.push(t.name.as_str());
                    }
                    let target = if parts.is_empty() {
                        path.to_path_buf()
                    } else {
                        sibling(path, &parts, "csv")
                    };
                    let mut buf = Vec::new();
                    t.write_csv(&mut buf, report.command, &s.meta)?;
                    fs::write(&target, buf)?;
                    written.push(target);
                }
            }
            Ok(written)
        }
    }
}
