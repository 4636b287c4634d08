//! Result tables and their JSON / CSV renderings.

use std::collections::BTreeMap;

use serde::ser::{Serialize, SerializeMap, Serializer};
use serde_json::value::RawValue;

use crate::config::RunConfig;
use crate::CliError;

/// A table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
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

/// 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            // JSON has no inf/nan; those go out as strings
            Cell::Num(x) if x.is_finite() => {
                RawValue::from_string(fmt_f64(*x)).map_err(serde::ser::Error::custom)?.serialize(s)
            }
            Cell::Num(x) => s.serialize_str(&fmt_f64(*x)),
            Cell::Int(i) => s.serialize_i64(*i),
            Cell::Bool(b) => s.serialize_bool(*b),
            Cell::Text(t) => s.serialize_str(t),
        }
    }
}

/// What a command produces.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: BTreeMap<String, Cell>,
    /// `Some(false)` makes the run exit with the check-failure code.
    pub passed: Option<bool>,
    /// Columns used by [`emit_plot_data`] by default.
    pub plot_columns: Vec<String>,
}

impl Report {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn plot(mut self, columns: &[&str]) -> Self {
        self.plot_columns = columns.iter().map(|c| c.to_string()).collect();
        self
    }
}

struct Rows<'a>(&'a Report);

impl Serialize for Rows<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.rows.iter().map(|r| {
            let pairs: Vec<(&String, &Cell)> = self.0.columns.iter().zip(r).collect();
            OrderedRow(pairs)
        }))
    }
}

struct OrderedRow<'a>(Vec<(&'a String, &'a Cell)>);

impl Serialize for OrderedRow<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

#[derive(serde::Serialize)]
struct JsonDoc<'a> {
    version: &'static str,
    config: &'a RunConfig,
    passed: Option<bool>,
    summary: &'a BTreeMap<String, Cell>,
    columns: &'a [String],
    rows: Rows<'a>,
}

pub fn to_json(report: &Report, config: &RunConfig) -> Result<String, CliError> {
    let doc = JsonDoc {
        version: sphint_core::VERSION,
        config,
        passed: report.passed,
        summary: &report.summary,
        columns: &report.columns,
        rows: Rows(report),
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_table(columns: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns).map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?).map_err(|e| CliError::Io(e.to_string()))
}

/// CSV with the config echo, version and summary as leading `#` lines.
pub fn to_csv(report: &Report, config: &RunConfig) -> Result<String, CliError> {
    let mut s = format!("# sphint {}\n", sphint_core::VERSION);
    for line in config.to_ini().lines() {
        s.push_str(&format!("# {line}\n"));
    }
    if let Some(p) = report.passed {
        s.push_str(&format!("# passed = {p}\n"));
    }
    for (k, v) in &report.summary {
        s.push_str(&format!("# {k} = {}\n", v.text()));
    }
    s.push_str(&csv_table(&report.columns, report.rows.iter().map(|r| r.iter().map(Cell::text).collect()))?);
    Ok(s)
}

/// Plain CSV of the chosen columns (in the given order), for plotting tools.
pub fn emit_plot_data(report: &Report, columns: &[String]) -> Result<String, CliError> {
    if report.rows.is_empty() {
        return Err(CliError::Config("nothing to plot: the result table is empty".into()));
    }
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            report.columns.iter().position(|x| x == c).ok_or_else(|| {
                CliError::Config(format!("unknown plot column '{c}' (available: {})", report.columns.join(", ")))
            })
        })
        .collect::<Result<_, _>>()?;
    csv_table(columns, report.rows.iter().map(|r| idx.iter().map(|&i| r[i].text()).collect()))
}
