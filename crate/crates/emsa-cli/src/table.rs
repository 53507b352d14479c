//! Fixed-schema result tables with bit-exact serialization: floats carry 17
//! significant digits (round-trip exact for doubles), rows keep construction
//! order, and the CSV bytes are a pure function of the table contents.

use std::fmt::Write as _;

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    UInt(u64),
    Float(f64),
    Bool(bool),
    Str(String),
    /// Missing/not-applicable.
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::UInt(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::UInt(v as u64)
    }
}
impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Str(v)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// 17-significant-digit float serialization; round-trips every finite double.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn render_csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::UInt(v) => v.to_string(),
            Cell::Float(v) => format_f64(*v),
            Cell::Bool(v) => v.to_string(),
            Cell::Str(v) => {
                debug_assert!(
                    !v.contains([',', '"', '\n']),
                    "cell strings must be CSV-safe: {v:?}"
                );
                v.clone()
            }
            Cell::Empty => String::new(),
        }
    }

    fn render_json(&self) -> serde_json::Value {
        match self {
            Cell::Int(v) => serde_json::json!(v),
            Cell::UInt(v) => serde_json::json!(v),
            // Keep floats as their exact 17-digit strings so the JSON output
            // is byte-stable and lossless.
            Cell::Float(v) => serde_json::Value::String(format_f64(*v)),
            Cell::Bool(v) => serde_json::json!(v),
            Cell::Str(v) => serde_json::Value::String(v.clone()),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

/// An experiment result table with a fixed column schema.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match schema");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::render_csv).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, serde_json::Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, cell)| (c.to_string(), cell.render_json()))
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }

    /// Cells in the `verdict` column, if present.
    pub fn verdicts(&self) -> Vec<&str> {
        let Some(idx) = self.columns.iter().position(|&c| c == "verdict") else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter_map(|row| match &row[idx] {
                Cell::Str(s) => Some(s.as_str()),
                _ => None,
            })
            .collect()
    }

    /// True when any verdict reports a violated bound. Drives the exit-code
    /// contract: violations exit 2, inconclusive results do not.
    pub fn has_bound_violation(&self) -> bool {
        self.verdicts().iter().any(|v| *v == "bound-violated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.0_f64.powi(-53), 6.02e23, -0.0, 1e-300] {
            let s = format_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {s}");
        }
    }

    #[test]
    fn csv_schema_and_bytes() {
        let mut t = Table::new(vec!["a", "b", "c"]);
        t.push_row(vec![Cell::UInt(1), Cell::Float(0.5), "x".into()]);
        t.push_row(vec![Cell::UInt(2), Cell::Empty, Cell::Bool(true)]);
        assert_eq!(
            t.to_csv(),
            "a,b,c\n1,5.0000000000000000e-1,x\n2,,true\n"
        );
    }

    #[test]
    fn verdict_extraction_and_exit_rule() {
        let mut t = Table::new(vec!["x", "verdict"]);
        t.push_row(vec![Cell::UInt(0), "consistent".into()]);
        t.push_row(vec![Cell::UInt(1), "inconclusive".into()]);
        assert_eq!(t.verdicts(), vec!["consistent", "inconclusive"]);
        assert!(!t.has_bound_violation());
        t.push_row(vec![Cell::UInt(2), "bound-violated".into()]);
        assert!(t.has_bound_violation());
    }
}
