//! Result tables and their CSV / JSON encodings.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
        }
    }
}

/// Column names, rows and a metadata block.
///
/// `wall_time_s` is kept apart from `meta` and only emitted on request, so
/// repeated runs produce identical files.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    pub meta: BTreeMap<String, Value>,
    pub wall_time_s: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonTable {
    meta: BTreeMap<String, Value>,
    rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        ResultTable { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new(), meta: BTreeMap::new(), wall_time_s: None }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::DimensionMismatch { expected: self.columns.len(), got: row.len() });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn push_reals(&mut self, row: &[f64]) -> Result<()> {
        self.push(row.iter().map(|&x| Cell::Real(x)).collect())
    }

    pub fn set_meta(&mut self, key: &str, value: impl Into<Value>) {
        self.meta.insert(key.to_string(), value.into());
    }

    /// Real-valued column by name; integers are widened.
    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name).ok_or_else(|| Error::invalid(format!("no column `{name}`")))?;
        self.rows
            .iter()
            .map(|r| match &r[k] {
                Cell::Real(x) => Ok(*x),
                Cell::Int(i) => Ok(*i as f64),
                Cell::Text(t) => Err(Error::invalid(format!("column `{name}` holds text `{t}`"))),
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io { path: "<memory>".into(), message: e.to_string() };
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(format_cell)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io { path: "<memory>".into(), message: e.to_string() })?;
        String::from_utf8(bytes).map_err(|e| Error::Io { path: "<memory>".into(), message: e.to_string() })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut meta = self.meta.clone();
        meta.insert("columns".into(), Value::from(self.columns.clone()));
        if let Some(t) = self.wall_time_s {
            meta.insert("wall_time_s".into(), Value::from(t));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|c| match c {
                Cell::Real(x) if !x.is_finite() => Cell::Text(format_real(*x)),
                other => other.clone(),
            }).collect())
            .collect();
        serde_json::to_string_pretty(&JsonTable { meta, rows }).map_err(|e| Error::Io { path: "<memory>".into(), message: e.to_string() })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: JsonTable = serde_json::from_str(text).map_err(|e| Error::invalid(format!("malformed table json: {e}")))?;
        let mut meta = parsed.meta;
        let columns: Vec<String> = match meta.remove("columns") {
            Some(Value::Array(a)) => a.into_iter().map(|v| v.as_str().map(str::to_string).unwrap_or_default()).collect(),
            _ => return Err(Error::invalid("table json lacks meta.columns")),
        };
        let wall_time_s = meta.remove("wall_time_s").and_then(|v| v.as_f64());
        let mut t = ResultTable { columns, rows: Vec::new(), meta, wall_time_s };
        for row in parsed.rows {
            let row = row
                .into_iter()
                .map(|c| match c {
                    Cell::Text(s) if matches!(s.as_str(), "NaN" | "inf" | "-inf") => Cell::Real(s.parse().unwrap_or(f64::NAN)),
                    other => other,
                })
                .collect();
            t.push(row)?;
        }
        Ok(t)
    }

    pub fn encode(&self, format: TableFormat) -> Result<String> {
        match format {
            TableFormat::Csv => self.to_csv(),
            TableFormat::Json => self.to_json(),
        }
    }
}

/// Seventeen significant digits, which round-trips every f64.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Int(i) => i.to_string(),
        Cell::Real(x) => format_real(*x),
        Cell::Text(t) => t.clone(),
    }
}

/// Writes the table; for CSV the metadata goes to a `<file>.meta.json` sidecar.
pub fn write_table(table: &ResultTable, path: &Path, format: TableFormat) -> Result<()> {
    let io = |p: &Path, e: std::io::Error| Error::Io { path: p.display().to_string(), message: e.to_string() };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    }
    std::fs::write(path, table.encode(format)?).map_err(|e| io(path, e))?;
    if format == TableFormat::Csv {
        let mut meta = table.meta.clone();
        meta.insert("columns".into(), Value::from(table.columns.clone()));
        if let Some(t) = table.wall_time_s {
            meta.insert("wall_time_s".into(), Value::from(t));
        }
        let side = sidecar_path(path);
        let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Io { path: side.display().to_string(), message: e.to_string() })?;
        std::fs::write(&side, text).map_err(|e| io(&side, e))?;
    }
    Ok(())
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    s.into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = ResultTable::new(["a", "b"]);
        assert_eq!(t.to_csv().unwrap(), "a,b\r\n");
    }

    #[test]
    fn quoting_follows_rfc4180() {
        let mut t = ResultTable::new(["name", "x"]);
        t.push(vec!["a,\"b\"".into(), 0.1.into()]).unwrap();
        assert_eq!(t.to_csv().unwrap(), "name,x\r\n\"a,\"\"b\"\"\",1.0000000000000001e-1\r\n");
    }

    #[test]
    fn ragged_rows_rejected() {
        let mut t = ResultTable::new(["a", "b"]);
        assert!(t.push(vec![1.0.into()]).is_err());
    }

    #[test]
    fn json_carries_meta_and_roundtrips() {
        let mut t = ResultTable::new(["k", "v", "label"]);
        t.set_meta("config_hash", "abc");
        t.push(vec![3usize.into(), (1.0 / 3.0).into(), "x".into()]).unwrap();
        t.push(vec![4usize.into(), f64::NAN.into(), "y".into()]).unwrap();
        let back = ResultTable::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back.columns(), t.columns());
        assert_eq!(back.meta["config_hash"], "abc");
        assert_eq!(back.rows()[0], t.rows()[0]);
        assert!(back.column_f64("v").unwrap()[1].is_nan());
    }

    #[test]
    fn encoding_is_deterministic() {
        let mut t = ResultTable::new(["x"]);
        t.set_meta("b", 1);
        t.set_meta("a", 2);
        t.push_reals(&[1e-300]).unwrap();
        assert_eq!(t.to_json().unwrap(), t.clone().to_json().unwrap());
        assert_eq!(t.to_csv().unwrap(), t.to_csv().unwrap());
    }

    proptest! {
        #[test]
        fn reals_roundtrip_through_csv_text(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = format_real(x);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }

        #[test]
        fn reals_roundtrip_through_json(x in proptest::num::f64::NORMAL) {
            let mut t = ResultTable::new(["x"]);
            t.push_reals(&[x]).unwrap();
            let back = ResultTable::from_json(&t.to_json().unwrap()).unwrap();
            prop_assert_eq!(back.column_f64("x").unwrap()[0].to_bits(), x.to_bits());
        }
    }
}
