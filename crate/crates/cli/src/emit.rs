//! Result tables and their CSV/JSON encodings.
//!
//! Numbers are written with 6 significant digits and fields keep the
//! column order of the table, so identical inputs give identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => bail!("unknown format '{other}' (expected csv or json)"),
        }
    }
}

impl Format {
    /// Explicit choice, else the extension of `out`, else `fallback`.
    pub fn resolve(explicit: Option<Format>, out: Option<&Path>, fallback: Format) -> Format {
        explicit
            .or_else(|| {
                out.and_then(|p| p.extension())
                    .and_then(|e| e.to_str())
                    .and_then(|e| e.parse().ok())
            })
            .unwrap_or(fallback)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
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

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(v) => sig6(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => round_sig6(*v).map_or(Value::Null, Into::into),
            Cell::Int(v) => (*v).into(),
            Cell::Text(s) => s.clone().into(),
            Cell::Empty => Value::Null,
        }
    }
}

/// `v` rounded to 6 significant digits; `None` for non-finite values.
pub fn round_sig6(v: f64) -> Option<f64> {
    if !v.is_finite() {
        return None;
    }
    format!("{v:.5e}").parse().ok()
}

/// Shortest text of `v` at 6 significant digits.
pub fn sig6(v: f64) -> String {
    match round_sig6(v) {
        None => v.to_string(),
        Some(0.0) => "0".into(),
        Some(r) if (1e-4..1e15).contains(&r.abs()) => r.to_string(),
        Some(r) => format!("{r:e}"),
    }
}

/// Rounds every number in a JSON document to 6 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(f) if !(n.is_i64() || n.is_u64()) => round_sig6(f).map_or(Value::Null, Into::into),
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::text))?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    /// Array of objects, keys in column order.
    pub fn to_json(&self) -> String {
        let mut s = String::from("[");
        for (i, r) in self.rows.iter().enumerate() {
            s.push_str(if i == 0 { "\n  {" } else { ",\n  {" });
            for (j, (c, v)) in self.columns.iter().zip(r).enumerate() {
                if j > 0 {
                    s.push_str(", ");
                }
                let _ = write!(s, "{}: {}", Value::from(c.as_str()), v.json());
            }
            s.push('}');
        }
        s.push_str(if self.rows.is_empty() { "]\n" } else { "\n]\n" });
        s
    }

    pub fn encode(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => Ok(self.to_json()),
        }
    }

    /// Fixed-width text rendering for terminals.
    pub fn to_text(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::text).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| cells.iter().map(|r| r[j].len()).chain([self.columns[j].len()]).max().unwrap_or(0))
            .collect();
        let line = |items: &[String]| {
            items
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = line(&self.columns);
        out.push('\n');
        out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
        out.push('\n');
        for r in &cells {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

/// Writes `text` to `out`, or to standard output when `out` is `None`.
pub fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Serializes `value` as pretty JSON with numbers at 6 significant digits.
pub fn json_document<T: serde::Serialize>(value: &T) -> Result<String> {
    let v = round_json(serde_json::to_value(value)?);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(3.14159265), "3.14159");
        assert_eq!(sig6(-0.000123456789), "-0.000123457");
        assert_eq!(sig6(1.36e-15), "1.36e-15");
        assert_eq!(sig6(200.0), "200");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1234567.0), "1234570");
        assert_eq!(sig6(f64::NAN), "NaN");
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(&["k", "mode_id", "re"]);
        assert_eq!(t.to_csv().unwrap(), "k,mode_id,re\n");
        assert_eq!(t.to_json(), "[]\n");
    }

    #[test]
    fn json_keeps_column_order() {
        let mut t = Table::new(&["z", "a"]);
        t.push(vec![Cell::Num(1.0 / 3.0), Cell::Empty]);
        let text = t.to_json();
        assert!(text.find("\"z\"").unwrap() < text.find("\"a\"").unwrap());
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v[0]["z"], 0.333333);
        assert!(v[0]["a"].is_null());
    }

    #[test]
    fn rounds_nested_json() {
        let v = round_json(serde_json::json!({"a": [1.23456789, 7], "b": {"c": 2.0000004}}));
        assert_eq!(v, serde_json::json!({"a": [1.23457, 7], "b": {"c": 2.0}}));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(Format::resolve(None, Some(Path::new("x.json")), Format::Csv), Format::Json);
        assert_eq!(Format::resolve(None, Some(Path::new("x.txt")), Format::Csv), Format::Csv);
        assert_eq!(Format::resolve(Some(Format::Csv), Some(Path::new("x.json")), Format::Json), Format::Csv);
    }
}
