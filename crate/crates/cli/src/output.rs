use std::fs;
use std::io::{self, Write};

use serde_json::{json, Map, Value};

use crate::args::{Format, OutputArgs};
use crate::Failure;

#[derive(Clone, Debug)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn to_json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => json!(x.to_string()),
            Cell::Text(s) => json!(s),
        }
    }

    fn to_field(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
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

/// Flat table; tolerances become trailing constant columns in CSV.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub tolerances: Vec<(&'static str, f64)>,
    /// Extra top-level JSON fields; CSV carries them only as gnuplot comments.
    pub meta: Map<String, Value>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn tolerance(mut self, name: &'static str, value: f64) -> Self {
        self.tolerances.push((name, value));
        self
    }

    pub fn meta(mut self, key: &str, value: Value) -> Self {
        self.meta.insert(key.to_string(), value);
        self
    }

    fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Object(
                    self.columns
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.to_string(), v.to_json()))
                        .collect(),
                )
            })
            .collect();
        let mut obj = self.meta.clone();
        obj.insert("rows".into(), Value::Array(rows));
        obj.insert("tolerances".into(), tolerances_json(&self.tolerances));
        Value::Object(obj)
    }

    fn to_csv(&self, gnuplot: bool) -> Result<String, Failure> {
        let mut buf = Vec::new();
        let header: Vec<&str> = self
            .columns
            .iter()
            .copied()
            .chain(self.tolerances.iter().map(|t| t.0))
            .collect();
        if gnuplot {
            let annotated: Vec<String> = header.iter().enumerate().map(|(i, c)| format!("{}:{c}", i + 1)).collect();
            writeln!(buf, "# columns {}", annotated.join(" ")).map_err(io_failure)?;
            for (k, v) in &self.meta {
                writeln!(buf, "# {k} = {v}").map_err(io_failure)?;
            }
        }
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&header).map_err(csv_failure)?;
            for row in &self.rows {
                let fields = row
                    .iter()
                    .map(Cell::to_field)
                    .chain(self.tolerances.iter().map(|t| format_float(t.1)));
                w.write_record(fields).map_err(csv_failure)?;
            }
            w.flush().map_err(io_failure)?;
        }
        String::from_utf8(buf).map_err(|e| Failure::Core(berezin_core::Error::InvalidArgument(e.to_string())))
    }
}

/// Shortest round-trip form, switching to exponent notation for very small or large values.
fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn tolerances_json(tols: &[(&'static str, f64)]) -> Value {
    Value::Object(tols.iter().map(|(k, v)| (k.to_string(), json!(v))).collect())
}

fn io_failure(e: io::Error) -> Failure {
    Failure::Core(berezin_core::Error::Io(e))
}

fn csv_failure(e: csv::Error) -> Failure {
    Failure::Core(berezin_core::Error::InvalidArgument(format!("csv: {e}")))
}

pub enum Report {
    /// JSON-only document.
    Document(Value),
    Table(Table),
}

pub fn emit(report: &Report, args: &OutputArgs, default: Format) -> Result<(), Failure> {
    let format = if args.gnuplot { Format::Csv } else { args.format.unwrap_or(default) };
    let text = match (report, format) {
        (Report::Document(v), Format::Json) => pretty(v)?,
        (Report::Document(_), Format::Csv) => {
            return Err(Failure::Usage("this command emits a JSON document; CSV is not available".into()))
        }
        (Report::Table(t), Format::Json) => pretty(&t.to_json())?,
        (Report::Table(t), Format::Csv) => t.to_csv(args.gnuplot)?,
    };
    match &args.out {
        Some(path) => fs::write(path, text).map_err(io_failure),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(io_failure)?;
            stdout.flush().map_err(io_failure)
        }
    }
}

fn pretty(v: &Value) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::Core(e.into()))?;
    s.push('\n');
    Ok(s)
}
