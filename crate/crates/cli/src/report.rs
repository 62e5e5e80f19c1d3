//! Reports: named blocks of fields and tables, rendered as text, JSON or CSV.
//!
//! Machine formats print every float with 17 significant digits; the text
//! format rounds to 12 for reading.

use std::fmt::Write as _;

use serde_json::{Map, Number};

use crate::problem::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    /// Not applicable at this row or field.
    Missing,
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v as i64)
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

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Missing, Into::into)
    }
}

fn nonfinite(v: f64) -> Option<&'static str> {
    if v.is_nan() {
        Some("nan")
    } else if v.is_infinite() {
        Some(if v > 0.0 { "inf" } else { "-inf" })
    } else {
        None
    }
}

/// 17 significant digits.
pub fn machine(v: f64) -> String {
    match nonfinite(v) {
        Some(s) => s.to_string(),
        None if v == 0.0 => "0".to_string(),
        None => format!("{v:.16e}"),
    }
}

fn human(v: f64) -> String {
    if let Some(s) = nonfinite(v) {
        return s.to_string();
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-4..1e6).contains(&a) {
        let decimals = (11 - a.log10().floor() as i32).max(0) as usize;
        let s = format!("{v:.decimals$}");
        let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.') } else { &s };
        s.to_string()
    } else {
        format!("{v:.11e}")
    }
}

impl Value {
    fn text(&self) -> String {
        match self {
            Value::Num(v) => human(*v),
            Value::Int(i) => i.to_string(),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
            Value::Missing => "-".to_string(),
        }
    }

    fn csv(&self) -> String {
        match self {
            Value::Num(v) => machine(*v),
            Value::Missing => String::new(),
            other => other.text(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Value::Num(v) => match nonfinite(*v) {
                Some(s) => serde_json::Value::String(s.to_string()),
                None => serde_json::Value::Number(machine(*v).parse::<Number>().expect("a formatted float is a JSON number")),
            },
            Value::Int(i) => serde_json::Value::from(*i),
            Value::Text(s) => serde_json::Value::String(s.clone()),
            Value::Bool(b) => serde_json::Value::Bool(*b),
            Value::Missing => serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Fields(Vec<(String, Value)>),
    Table(Table),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub body: Body,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub command: String,
    pub blocks: Vec<Block>,
}

/// Builder for a fields block.
#[derive(Debug, Default)]
pub struct Fields(Vec<(String, Value)>);

impl Fields {
    pub fn new() -> Self {
        Fields(Vec::new())
    }

    pub fn add(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.0.push((key.to_string(), v.into()));
        self
    }

    pub fn push(&mut self, key: &str, v: impl Into<Value>) {
        self.0.push((key.to_string(), v.into()));
    }
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Report {
            command: command.into(),
            blocks: Vec::new(),
        }
    }

    pub fn fields(&mut self, name: &str, f: Fields) {
        self.blocks.push(Block {
            name: name.to_string(),
            body: Body::Fields(f.0),
        });
    }

    pub fn table(&mut self, name: &str, t: Table) {
        self.blocks.push(Block {
            name: name.to_string(),
            body: Body::Table(t),
        });
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// A field of a fields block, for tests and callers that inspect verdicts.
    pub fn field(&self, block: &str, key: &str) -> Option<&Value> {
        match &self.block(block)?.body {
            Body::Fields(f) => f.iter().find(|(k, _)| k == key).map(|(_, v)| v),
            Body::Table(_) => None,
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.to_text(),
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.command);
        for b in &self.blocks {
            let _ = writeln!(out, "\n[{}]", b.name);
            match &b.body {
                Body::Fields(f) => {
                    let w = f.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                    for (k, v) in f {
                        let _ = writeln!(out, "{k:<w$}  {}", v.text());
                    }
                }
                Body::Table(t) => {
                    let cells: Vec<Vec<String>> = t.rows.iter().map(|r| r.iter().map(Value::text).collect()).collect();
                    let widths: Vec<usize> = (0..t.columns.len())
                        .map(|j| cells.iter().map(|r| r[j].chars().count()).chain([t.columns[j].len()]).max().unwrap_or(0))
                        .collect();
                    let line = |row: &[String]| {
                        row.iter()
                            .zip(&widths)
                            .map(|(c, &w)| format!("{c:>w$}"))
                            .collect::<Vec<_>>()
                            .join("  ")
                    };
                    let _ = writeln!(out, "{}", line(&t.columns));
                    for r in &cells {
                        let _ = writeln!(out, "{}", line(r));
                    }
                }
            }
        }
        out
    }

    fn to_json(&self) -> String {
        let mut root = Map::new();
        root.insert("command".into(), self.command.clone().into());
        for b in &self.blocks {
            let v = match &b.body {
                Body::Fields(f) => serde_json::Value::Object(f.iter().map(|(k, v)| (k.clone(), v.json())).collect()),
                Body::Table(t) => serde_json::Value::Array(
                    t.rows
                        .iter()
                        .map(|r| serde_json::Value::Object(t.columns.iter().cloned().zip(r.iter().map(Value::json)).collect()))
                        .collect(),
                ),
            };
            root.insert(b.name.clone(), v);
        }
        let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(root)).expect("a JSON value serializes");
        s.push('\n');
        s
    }

    /// Long format: one `block,row,column,value` record per value.
    fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let write = |w: &mut csv::Writer<Vec<u8>>, rec: [&str; 4]| w.write_record(rec).expect("writing to memory");
        write(&mut w, ["block", "row", "column", "value"]);
        write(&mut w, ["command", "", "", &self.command]);
        for b in &self.blocks {
            match &b.body {
                Body::Fields(f) => {
                    for (k, v) in f {
                        write(&mut w, [&b.name, "", k, &v.csv()]);
                    }
                }
                Body::Table(t) => {
                    for (i, r) in t.rows.iter().enumerate() {
                        for (c, v) in t.columns.iter().zip(r) {
                            write(&mut w, [&b.name, &i.to_string(), c, &v.csv()]);
                        }
                    }
                }
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV of UTF-8 input")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("tsvar demo");
        r.fields("summary", Fields::new().add("value", 1.0 / 3.0).add("n", 3usize).add("ok", true).add("lambda", None::<f64>));
        let mut t = Table::new(&["t", "y"]);
        t.push(vec![0.5.into(), (-2e-9).into()]);
        t.push(vec![1.0.into(), f64::INFINITY.into()]);
        r.table("curve", t);
        r
    }

    #[test]
    fn machine_numbers_have_seventeen_digits() {
        assert_eq!(machine(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(machine(1.0 / 3.0).parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(machine(-0.0), "0");
    }

    #[test]
    fn human_numbers_are_rounded() {
        assert_eq!(human(1.0 / 3.0), "0.333333333333");
        assert_eq!(human(1234.5), "1234.5");
        assert_eq!(human(-2e-9), "-2.00000000000e-9");
    }

    #[test]
    fn json_keeps_full_precision() {
        let j: serde_json::Value = serde_json::from_str(&sample().render(Format::Json)).unwrap();
        assert_eq!(j["summary"]["value"].as_f64(), Some(1.0 / 3.0));
        assert_eq!(j["summary"]["lambda"], serde_json::Value::Null);
        assert_eq!(j["curve"][1]["y"], "inf");
        assert_eq!(j["curve"][0]["y"].as_f64(), Some(-2e-9));
    }

    #[test]
    fn csv_is_long_format() {
        let csv = sample().render(Format::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "block,row,column,value");
        assert_eq!(lines[1], "command,,,tsvar demo");
        assert!(lines.contains(&"curve,0,y,-2.0000000000000001e-9"));
        assert!(lines.contains(&"summary,,lambda,"));
    }

    #[test]
    fn text_aligns_columns() {
        let text = sample().render(Format::Text);
        assert!(text.contains("[curve]\n  t                  y\n0.5  -2.00000000000e-9\n  1                inf\n"), "{text}");
        assert!(text.contains("lambda  -\n"));
    }
}
