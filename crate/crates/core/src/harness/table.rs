//! Result tables and their CSV, JSON and Markdown renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{param, Error, Result};

/// Output encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Format {
    Csv,
    Json,
    #[default]
    Markdown,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "markdown" | "md" => Ok(Self::Markdown),
            other => param(format!("unknown format '{other}' (csv, json, markdown)")),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
            Self::Markdown => "md",
        }
    }
}

/// One table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Int(i64),
    /// Value and the number of decimals shown in text formats.
    Float(f64, usize),
    Text(String),
    Bool(bool),
}

impl Cell {
    pub fn int(v: impl TryInto<i64>) -> Self {
        Self::Int(v.try_into().unwrap_or(i64::MAX))
    }

    pub fn f(v: f64, decimals: usize) -> Self {
        Self::Float(v, decimals)
    }

    pub fn text(v: impl Into<String>) -> Self {
        Self::Text(v.into())
    }

    fn render(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Float(v, _) if !v.is_finite() => v.to_string(),
            Self::Float(v, d) => format!("{v:.d$}"),
            Self::Text(s) => s.clone(),
            Self::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Self::Int(v) => json!(v),
            Self::Float(v, _) if v.is_finite() => json!(v),
            Self::Float(v, _) => json!(v.to_string()),
            Self::Text(s) => json!(s),
            Self::Bool(b) => json!(b),
        }
    }
}

/// Parameters and origin of a table.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub id: String,
    pub seed: u64,
    pub commit: String,
    pub version: String,
    pub parameters: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub provenance: Provenance,
}

impl Table {
    pub fn new(title: impl Into<String>, columns: &[&str]) -> Self {
        Self { title: title.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), provenance: Provenance::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Look up a cell by row index and column name.
    pub fn cell(&self, row: usize, column: &str) -> Option<&Cell> {
        let c = self.columns.iter().position(|x| x == column)?;
        self.rows.get(row)?.get(c)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
            Format::Markdown => Ok(self.to_markdown()),
        }
    }

    fn provenance_lines(&self) -> Vec<String> {
        let p = &self.provenance;
        let mut lines = vec![format!("id: {}", p.id), format!("seed: {}", p.seed), format!("commit: {}", p.commit), format!("version: {}", p.version)];
        lines.extend(p.parameters.iter().map(|(k, v)| format!("param {k}: {v}")));
        lines
    }

    fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for l in self.provenance_lines() {
            writeln!(out, "# {l}").expect("write to string");
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))?);
        Ok(out)
    }

    fn to_json(&self) -> Result<String> {
        let rows: Vec<Value> =
            self.rows.iter().map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect::<Map<_, _>>())).collect();
        let obj = json!({
            "id": self.provenance.id,
            "title": self.title,
            "provenance": self.provenance,
            "columns": self.columns,
            "rows": rows,
        });
        serde_json::to_string_pretty(&obj).map(|s| s + "\n").map_err(|e| Error::Io(e.to_string()))
    }

    fn to_markdown(&self) -> String {
        let mut out = String::from("<!--\n");
        for l in self.provenance_lines() {
            writeln!(out, "{l}").expect("write to string");
        }
        writeln!(out, "-->\n\n### {}\n", self.title).expect("write to string");
        writeln!(out, "| {} |", self.columns.join(" | ")).expect("write to string");
        writeln!(out, "|{}", "---|".repeat(self.columns.len())).expect("write to string");
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            writeln!(out, "| {} |", cells.join(" | ")).expect("write to string");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("demo", &["n", "beta", "name"]);
        t.provenance.id = "demo".into();
        t.push(vec![Cell::int(3), Cell::f(0.5, 3), Cell::text("a,b")]);
        t
    }

    #[test]
    fn csv_has_provenance_and_quotes() {
        let s = sample().render(Format::Csv).unwrap();
        assert!(s.starts_with("# id: demo\n"));
        assert!(s.contains("n,beta,name\n3,0.500,\"a,b\"\n"));
    }

    #[test]
    fn json_rows_are_objects() {
        let v: Value = serde_json::from_str(&sample().render(Format::Json).unwrap()).unwrap();
        assert_eq!(v["rows"][0]["beta"], json!(0.5));
        assert_eq!(v["provenance"]["seed"], json!(0));
    }

    #[test]
    fn markdown_shape() {
        let s = sample().render(Format::Markdown).unwrap();
        assert!(s.contains("| n | beta | name |\n|---|---|---|\n| 3 | 0.500 | a,b |"));
    }
}
