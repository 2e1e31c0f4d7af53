//! Report schema and its json, csv and text renderings.

use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEcho {
    pub name: String,
    pub kind: String,
    pub seed: u64,
    /// Parameters after defaults are filled in.
    pub parameters: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Integer(i64),
    Number(f64),
    Flag(bool),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub value: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

impl Cell {
    pub fn num(v: f64) -> Self {
        Cell {
            value: Value::Number(v),
            tol: None,
        }
    }

    pub fn int(v: usize) -> Self {
        Cell {
            value: Value::Integer(v as i64),
            tol: None,
        }
    }

    pub fn checked(v: f64, tol: f64) -> Self {
        Cell {
            value: Value::Number(v),
            tol: Some(tol),
        }
    }

    pub fn text(s: impl Into<String>) -> Self {
        Cell {
            value: Value::Text(s.into()),
            tol: None,
        }
    }

    pub fn flag(b: bool) -> Self {
        Cell {
            value: Value::Flag(b),
            tol: None,
        }
    }

    fn render(&self) -> String {
        let v = match &self.value {
            Value::Integer(n) => n.to_string(),
            Value::Number(x) => format!("{x:.16e}"),
            Value::Flag(b) => b.to_string(),
            Value::Text(s) => s.clone(),
        };
        match self.tol {
            Some(t) => format!("{v} (tol {t:e})"),
            None => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `observed ≤ bound`
    AtMost,
    /// `observed > bound`
    Above,
    /// A boolean property, no number attached.
    Holds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub relation: Relation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

impl Assertion {
    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Assertion {
            name: name.into(),
            passed: observed <= bound,
            relation: Relation::AtMost,
            observed: Some(observed),
            bound: Some(bound),
        }
    }

    pub fn above(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Assertion {
            name: name.into(),
            passed: observed > bound,
            relation: Relation::Above,
            observed: Some(observed),
            bound: Some(bound),
        }
    }

    pub fn holds(name: impl Into<String>, passed: bool) -> Self {
        Assertion {
            name: name.into(),
            passed,
            relation: Relation::Holds,
            observed: None,
            bound: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub scenario: ScenarioEcho,
    pub tables: Vec<Table>,
    pub assertions: Vec<Assertion>,
    pub notes: Vec<String>,
    pub passed: bool,
    /// Wall-clock seconds; left out unless timing was requested, so the
    /// default output stays byte-identical across runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_secs: Option<f64>,
}

impl Report {
    pub fn new(scenario: ScenarioEcho) -> Self {
        Report {
            scenario,
            tables: Vec::new(),
            assertions: Vec::new(),
            notes: Vec::new(),
            passed: true,
            duration_secs: None,
        }
    }

    pub fn assert(&mut self, a: Assertion) {
        self.passed &= a.passed;
        self.assertions.push(a);
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn row_count(&self) -> usize {
        self.tables.iter().map(|t| t.rows.len()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "txt",
        }
    }
}

/// Pretty printing with every float at 17 significant digits.
struct FixedFloats(PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(w $(, $arg)*)
            }
        )*
    };
}

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

pub fn to_json(report: &Report) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
    report
        .serialize(&mut ser)
        .map_err(|e| CliError::Serialize(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| CliError::Serialize(e.to_string()))
}

pub fn from_json(s: &str) -> Result<Report> {
    serde_json::from_str(s).map_err(|e| CliError::Parse {
        origin: "report".into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// One record per table row: table name, then the cells. No header line.
pub fn to_csv(report: &Report) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .has_headers(false)
        .from_writer(Vec::new());
    for t in &report.tables {
        for row in &t.rows {
            let mut rec = vec![t.name.clone()];
            rec.extend(row.iter().map(|c| match &c.value {
                Value::Integer(n) => n.to_string(),
                Value::Number(x) => format!("{x:.16e}"),
                Value::Flag(b) => b.to_string(),
                Value::Text(s) => s.clone(),
            }));
            w.write_record(&rec)
                .map_err(|e| CliError::Serialize(e.to_string()))?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Serialize(e.to_string()))
}

pub fn to_text(report: &Report) -> String {
    let mut s = String::new();
    let sc = &report.scenario;
    let _ = writeln!(s, "scenario {} ({}), seed {}", sc.name, sc.kind, sc.seed);
    for t in &report.tables {
        let _ = writeln!(s, "\n[{}]", t.name);
        let _ = writeln!(s, "  {}", t.columns.join(" | "));
        for row in &t.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(s, "  {}", cells.join(" | "));
        }
    }
    if !report.assertions.is_empty() {
        let _ = writeln!(s, "\nassertions:");
    }
    for a in &report.assertions {
        let mark = if a.passed { "PASS" } else { "FAIL" };
        let detail = match (a.relation, a.observed, a.bound) {
            (Relation::AtMost, Some(o), Some(b)) => format!(" ({o:e} <= {b:e})"),
            (Relation::Above, Some(o), Some(b)) => format!(" ({o:e} > {b:e})"),
            _ => String::new(),
        };
        let _ = writeln!(s, "  {mark} {}{detail}", a.name);
    }
    for n in &report.notes {
        let _ = writeln!(s, "\nnote: {n}");
    }
    if let Some(d) = report.duration_secs {
        let _ = writeln!(s, "\nduration: {d:.3}s");
    }
    let _ = writeln!(s, "\n{}", if report.passed { "PASSED" } else { "FAILED" });
    s
}

pub fn emit(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(report),
        Format::Csv => to_csv(report),
        Format::Text => Ok(to_text(report)),
    }
}
