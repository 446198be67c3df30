//! Tabular output in CSV or JSON, both carrying the same values and a schema version.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// A finite float as a JSON number; non-finite values become the strings `inf`, `-inf`, `nan`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(format!("{x}")))
}

fn csv_cell(v: &Value) -> String {
    let raw = match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw
    }
}

pub fn render(command: &str, tables: &[Table], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = format!("# support-size schema v{SCHEMA_VERSION} command={command}\n");
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "# table={}", t.name);
                let _ = writeln!(out, "{}", t.columns.join(","));
                for row in &t.rows {
                    let cells: Vec<String> = row.iter().map(csv_cell).collect();
                    let _ = writeln!(out, "{}", cells.join(","));
                }
            }
            out
        }
        Format::Json => {
            let mut map = Map::new();
            for t in tables {
                map.insert(t.name.clone(), json!({ "columns": t.columns, "rows": t.rows }));
            }
            let doc = json!({ "schema_version": SCHEMA_VERSION, "command": command, "tables": map });
            serde_json::to_string_pretty(&doc).expect("plain values serialise") + "\n"
        }
    }
}
