use std::fs;
use std::io::Write;
use std::path::Path;

use cantor_bayes::consistency::SCHEMA_VERSION;
use cantor_bayes::rational::{decimal, format_rational};
use cantor_bayes::Rational;
use serde_json::{Map, Value};

use crate::args::Format;
use crate::Failure;

pub const DECIMAL_DIGITS: usize = 12;

pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

pub struct Report {
    pub command: &'static str,
    pub json: Map<String, Value>,
    pub table: Option<Table>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Report { command, json: Map::new(), table: None }
    }

    pub fn set(&mut self, key: &str, value: impl serde::Serialize) -> &mut Self {
        let v = serde_json::to_value(value).expect("report values serialize");
        self.json.insert(key.to_string(), v);
        self
    }

    pub fn table(&mut self, table: Table) -> &mut Self {
        self.table = Some(table);
        self
    }
}

pub fn exact(q: &Rational) -> String {
    format_rational(q)
}

pub fn dec(q: &Rational) -> String {
    decimal(q, DECIMAL_DIGITS)
}

/// An exact value with its decimal rendering, for JSON fields.
pub fn value(q: &Rational) -> Value {
    serde_json::json!({ "exact": exact(q), "decimal": dec(q) })
}

fn render(report: Report, format: Format) -> Result<String, Failure> {
    match format {
        Format::Json => {
            let mut obj = Map::new();
            obj.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
            obj.insert("command".into(), Value::from(report.command));
            obj.extend(report.json);
            let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("json renders");
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let table = report.table.ok_or_else(|| {
                Failure::Schema(format!("{} has no CSV rendering; use --format json", report.command))
            })?;
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Failure::Schema(e.to_string());
            w.write_record(&table.headers).map_err(csv_err)?;
            for row in &table.rows {
                w.write_record(row).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Failure::Schema(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv is utf-8"))
        }
    }
}

pub fn emit(report: Report, format: Format, out: Option<&Path>) -> Result<(), Failure> {
    let text = render(report, format)?;
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Schema(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::Schema(e.to_string()))
        }
    }
}
