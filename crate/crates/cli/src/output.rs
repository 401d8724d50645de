//! Tabular output shared by every subcommand: CSV or JSON records, with
//! floats printed to a fixed number of significant digits.

use std::io::Write;

use serde_json::{Map, Number, Value};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    /// Integers too large for 64 bits, kept as decimal text.
    Big(String),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        i64::try_from(v).map(Cell::Int).unwrap_or_else(|_| Cell::Big(v.to_string()))
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
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

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// `v` to `digits` significant digits, plain notation when the exponent is
/// moderate, trailing zeros removed.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn cell_text(c: &Cell, digits: usize) -> String {
    match c {
        Cell::Int(v) => v.to_string(),
        Cell::Big(s) | Cell::Text(s) => s.clone(),
        Cell::Float(v) => format_sig(*v, digits),
        Cell::Bool(b) => b.to_string(),
        Cell::Empty => String::new(),
    }
}

fn cell_json(c: &Cell, digits: usize) -> Value {
    match c {
        Cell::Int(v) => Value::from(*v),
        Cell::Big(s) | Cell::Text(s) => Value::String(s.clone()),
        Cell::Float(v) => format_sig(*v, digits)
            .parse::<f64>()
            .ok()
            .and_then(Number::from_f64)
            .map(Value::Number)
            .unwrap_or(Value::Null),
        Cell::Bool(b) => Value::Bool(*b),
        Cell::Empty => Value::Null,
    }
}

pub fn write_table<W: Write>(out: W, t: &Table, format: Format, digits: usize) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&t.columns)?;
            for row in &t.rows {
                w.write_record(row.iter().map(|c| cell_text(c, digits)))?;
            }
            w.flush()
        }
        Format::Json => {
            let records: Vec<Value> = t
                .rows
                .iter()
                .map(|row| {
                    let m: Map<String, Value> = t
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(k, c)| (k.clone(), cell_json(c, digits)))
                        .collect();
                    Value::Object(m)
                })
                .collect();
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &records)?;
            writeln!(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(2.618033988749895, 12), "2.61803398875");
        assert_eq!(format_sig(1.0, 12), "1");
        assert_eq!(format_sig(0.000123456, 3), "0.000123");
        assert_eq!(format_sig(1.5e-9, 12), "1.5e-9");
        assert_eq!(format_sig(-4096.0, 12), "-4096");
        assert_eq!(format_sig(6.02e23, 4), "6.02e23");
    }

    #[test]
    fn csv_quotes_commas() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![Cell::Text("x, y".into()), Cell::Float(0.5)]);
        let mut buf = Vec::new();
        write_table(&mut buf, &t, Format::Csv, 12).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n\"x, y\",0.5\n");
    }
}
