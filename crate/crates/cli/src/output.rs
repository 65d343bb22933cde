//! Rendering of command results as JSON or CSV, and the run manifest.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// One CSV cell: a number, text, or nothing (failed computation).
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Object(Value),
    Table {
        header: Vec<&'static str>,
        rows: Vec<Vec<Cell>>,
    },
    /// Pre-rendered text written verbatim in either format.
    Document(String),
}

impl Output {
    pub fn default_format(&self) -> Format {
        match self {
            Output::Object(_) => Format::Json,
            Output::Table { .. } => Format::Csv,
            Output::Document(_) => Format::Json,
        }
    }

    pub fn render(&self, format: Format) -> String {
        match (self, format) {
            (Output::Document(text), _) => text.clone(),
            (Output::Object(v), Format::Json) => json_text(v),
            (Output::Object(v), Format::Csv) => {
                let mut flat = Vec::new();
                flatten("", v, &mut flat);
                let header: Vec<&str> = flat.iter().map(|(k, _)| k.as_str()).collect();
                let row: Vec<String> = flat.iter().map(|(_, v)| csv_value(v)).collect();
                format!("{}\n{}\n", header.join(","), row.join(","))
            }
            (Output::Table { header, rows }, Format::Csv) => {
                let mut out = header.join(",");
                out.push('\n');
                for row in rows {
                    let cells: Vec<String> = row.iter().map(csv_cell).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
                out
            }
            (Output::Table { header, rows }, Format::Json) => {
                let items: Vec<Value> = rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = header
                            .iter()
                            .zip(row)
                            .map(|(h, c)| {
                                let v = match c {
                                    Cell::Num(x) => number(*x),
                                    Cell::Text(s) => Value::String(s.clone()),
                                    Cell::Empty => Value::Null,
                                };
                                (h.to_string(), v)
                            })
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                json_text(&Value::Array(items))
            }
        }
    }
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Plain decimal text with at most 12 significant digits.
pub fn decimal(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{}", round12(x))
    }
}

fn number(x: f64) -> Value {
    serde_json::Number::from_f64(round12(x)).map_or(Value::Null, Value::Number)
}

/// Rounds every float in a JSON tree to 12 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => number(n.as_f64().unwrap()),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(&round_json(v.clone())).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn csv_cell(c: &Cell) -> String {
    match c {
        Cell::Num(x) => decimal(*x),
        Cell::Text(s) => quote(s),
        Cell::Empty => String::new(),
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_value(v: &Value) -> String {
    match v {
        Value::Number(n) => decimal(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => quote(s),
        Value::Null => String::new(),
        other => quote(&other.to_string()),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(o) => o.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        other => out.push((prefix.to_string(), other.clone())),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Provenance written next to every output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    /// SHA-256 of each input file, keyed by role (`model`, `config`, `spec`).
    pub input_digests: BTreeMap<String, String>,
    pub config: Value,
    pub tool_version: String,
    pub rng_seed: u64,
    pub rng_algorithm: &'static str,
    pub output_digest: String,
    pub wall_time_seconds: f64,
}
