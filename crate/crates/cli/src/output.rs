use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use serde_json::{Map, Value as Json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}
impl From<Option<f64>> for Value {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Value::Empty, Value::Num)
    }
}
impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}
impl From<u32> for Value {
    fn from(v: u32) -> Self {
        Value::Int(v as i64)
    }
}
impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v as i64)
    }
}
impl From<Option<u64>> for Value {
    fn from(v: Option<u64>) -> Self {
        v.map_or(Value::Empty, |x| Value::Int(x as i64))
    }
}
impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}
impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}
impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}
impl From<Option<String>> for Value {
    fn from(v: Option<String>) -> Self {
        v.map_or(Value::Empty, Value::Text)
    }
}

/// Rows with a fixed column order; an empty table still prints its header.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn round(x: f64, digits: Option<usize>) -> f64 {
    match digits {
        Some(d) if x.is_finite() => {
            let f = 10f64.powi(d as i32);
            (x * f).round() / f
        }
        _ => x,
    }
}

fn text(v: &Value, digits: Option<usize>) -> String {
    match v {
        Value::Num(x) => match digits {
            Some(d) if x.is_finite() => format!("{x:.d$}"),
            _ => x.to_string(),
        },
        Value::Int(i) => i.to_string(),
        Value::Text(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Empty => String::new(),
    }
}

fn json(v: &Value, digits: Option<usize>) -> Json {
    match v {
        Value::Num(x) => {
            serde_json::Number::from_f64(round(*x, digits)).map_or(Json::Null, Json::Number)
        }
        Value::Int(i) => Json::from(*i),
        Value::Text(s) => Json::from(s.as_str()),
        Value::Bool(b) => Json::from(*b),
        Value::Empty => Json::Null,
    }
}

impl Table {
    pub fn to_json(&self, digits: Option<usize>) -> Json {
        Json::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Json> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), json(v, digits)))
                        .collect();
                    Json::Object(obj)
                })
                .collect(),
        )
    }

    pub fn write<W: Write>(&self, out: W, format: Format, digits: Option<usize>) -> io::Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(|v| text(v, digits)))?;
                }
                w.flush()
            }
            Format::Json => write_json(out, &self.to_json(digits)),
        }
    }
}

pub fn write_json<W: Write>(mut out: W, value: &Json) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)
}

/// Stdout, or the file given with `--output`.
pub fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}
