//! Column tables serialized as CSV or JSON.

use serde_json::{Map, Value};

use crate::config::Format;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(&'static str),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&'static str> for Cell {
    fn from(s: &'static str) -> Self {
        Cell::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Header plus one line per row, LF endings, shortest round-trip floats.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.rows.len() + 1) * self.columns.len());
        out.push_str(&self.columns.join(","));
        out.push('\n');
        let mut buf = ryu::Buffer::new();
        for row in &self.rows {
            for (k, cell) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                match *cell {
                    Cell::Num(x) if x.is_finite() => out.push_str(buf.format_finite(x)),
                    Cell::Num(x) if x.is_nan() => out.push_str("nan"),
                    Cell::Num(x) => out.push_str(if x > 0.0 { "inf" } else { "-inf" }),
                    Cell::Int(n) => out.push_str(&n.to_string()),
                    Cell::Bool(b) => out.push_str(if b { "true" } else { "false" }),
                    Cell::Text(s) => out.push_str(s),
                }
            }
            out.push('\n');
        }
        out
    }

    /// `{"columns": [...], "rows": [[...], ...]}`; non-finite numbers become
    /// `null`.
    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Array(
                    row.iter()
                        .map(|c| match *c {
                            Cell::Num(x) => Value::from(x),
                            Cell::Int(n) => Value::from(n),
                            Cell::Bool(b) => Value::from(b),
                            Cell::Text(s) => Value::from(s),
                        })
                        .collect(),
                )
            })
            .collect();
        let mut m = Map::new();
        m.insert("columns".into(), Value::from(self.columns.clone()));
        m.insert("rows".into(), Value::Array(rows));
        let mut s = serde_json::to_string(&Value::Object(m)).expect("table serializes");
        s.push('\n');
        s
    }
}
