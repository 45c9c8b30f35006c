//! Experiment reports: tables, certificates and findings.
//!
//! Findings are rules over table cells, evaluated whenever the report is
//! rendered; a report never stores a finding's value.

use std::fmt;

use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::equilibrium::EquilibriumCertificate;
use crate::error::{Error, Result};
use crate::rational::Q;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cell {
    Num(Q),
    Text(String),
    Bool(bool),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(q) => write!(f, "{q}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl From<Q> for Cell {
    fn from(q: Q) -> Self {
        Cell::Num(q)
    }
}

impl From<&Q> for Cell {
    fn from(q: &Q) -> Self {
        Cell::Num(q.clone())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Num(Q::from_integer(n.into()))
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Num(Q::from_integer(n.into()))
    }
}

impl Serialize for Cell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Bool(b) => s.serialize_bool(*b),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
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
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Rows are keyed by their first cell.
    fn row(&self, key: &str) -> Option<&Vec<Cell>> {
        self.rows.iter().find(|r| r[0].to_string() == key)
    }
}

/// Address of one cell: table name, first-column key, column name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CellRef {
    pub table: String,
    pub row: String,
    pub column: String,
}

pub fn cell(table: &str, row: &str, column: &str) -> CellRef {
    CellRef {
        table: table.into(),
        row: row.into(),
        column: column.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    Empty { table: String },
    NonEmpty { table: String },
    RowCount { table: String, count: usize },
    AllTrue { table: String, column: String },
    /// Every cell of `column` equals `value`.
    AllEqual { table: String, column: String, value: String },
    /// Some cell of `column` differs from `value`.
    AnyDiffers { table: String, column: String, value: String },
    /// All cells of `column` are equal.
    Constant { table: String, column: String },
    /// `lhs <= rhs` row by row.
    ColumnsLe { table: String, lhs: String, rhs: String },
    CellEquals { cell: CellRef, value: String },
    Same { lhs: CellRef, rhs: CellRef },
    Less { lhs: CellRef, rhs: CellRef },
    All { rules: Vec<Rule> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub name: String,
    pub rule: Rule,
}

#[derive(Clone, Debug)]
pub struct LabeledCertificate {
    pub label: String,
    /// Headline certificates carry the scenario's claim; the CLI exits
    /// nonzero when one fails.
    pub headline: bool,
    pub certificate: EquilibriumCertificate,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub scenario: String,
    pub parameters: Vec<(String, String)>,
    pub tables: Vec<Table>,
    pub certificates: Vec<LabeledCertificate>,
    pub findings: Vec<Finding>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(scenario: impl Into<String>) -> Self {
        Report {
            scenario: scenario.into(),
            parameters: Vec::new(),
            tables: Vec::new(),
            certificates: Vec::new(),
            findings: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl fmt::Display) {
        self.parameters.push((key.into(), value.to_string()));
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    pub fn certificate(&mut self, label: &str, headline: bool, certificate: EquilibriumCertificate) {
        self.certificates.push(LabeledCertificate {
            label: label.into(),
            headline,
            certificate,
        });
    }

    pub fn finding(&mut self, name: &str, rule: Rule) {
        self.findings.push(Finding { name: name.into(), rule });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Certificate summary as a table named `certificates`, so findings can
    /// refer to verdicts and gaps.
    pub fn certificate_table(&self) -> Table {
        let mut t = Table::new(
            "certificates",
            &["label", "profile", "epsilon", "max_gap", "verdict", "strict", "headline"],
        );
        for c in &self.certificates {
            t.push(vec![
                c.label.as_str().into(),
                c.certificate.profile.join(" ").into(),
                (&c.certificate.epsilon).into(),
                c.certificate.max_gap().into(),
                c.certificate.verdict.into(),
                c.certificate.strict.into(),
                c.headline.into(),
            ]);
        }
        t
    }

    /// All tables including the certificate summary.
    pub fn all_tables(&self) -> Vec<Table> {
        let mut out = self.tables.clone();
        out.push(self.certificate_table());
        out
    }

    fn find_table<'a>(tables: &'a [Table], name: &str) -> Result<&'a Table> {
        tables
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Definition(format!("no table {name}")))
    }

    fn lookup(tables: &[Table], r: &CellRef) -> Result<Cell> {
        let t = Self::find_table(tables, &r.table)?;
        let col = t
            .column(&r.column)
            .ok_or_else(|| Error::Definition(format!("no column {} in {}", r.column, r.table)))?;
        let row = t
            .row(&r.row)
            .ok_or_else(|| Error::Definition(format!("no row {} in {}", r.row, r.table)))?;
        Ok(row[col].clone())
    }

    /// The cell at `table`, `row` (first-column key) and `column`, looking in
    /// the certificate table too.
    pub fn get(&self, table: &str, row: &str, column: &str) -> Result<Cell> {
        Self::lookup(&self.all_tables(), &cell(table, row, column))
    }

    /// As [`Report::get`], for numeric cells.
    pub fn get_q(&self, table: &str, row: &str, column: &str) -> Result<Q> {
        Self::num(&self.get(table, row, column)?)
    }

    pub fn table_named(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    fn column_cells(tables: &[Table], table: &str, column: &str) -> Result<Vec<Cell>> {
        let t = Self::find_table(tables, table)?;
        let col = t
            .column(column)
            .ok_or_else(|| Error::Definition(format!("no column {column} in {table}")))?;
        Ok(t.rows.iter().map(|r| r[col].clone()).collect())
    }

    fn num(c: &Cell) -> Result<Q> {
        match c {
            Cell::Num(q) => Ok(q.clone()),
            other => Err(Error::Definition(format!("{other} is not a number"))),
        }
    }

    fn eval(tables: &[Table], rule: &Rule) -> Result<bool> {
        Ok(match rule {
            Rule::Empty { table } => Self::find_table(tables, table)?.rows.is_empty(),
            Rule::NonEmpty { table } => !Self::find_table(tables, table)?.rows.is_empty(),
            Rule::RowCount { table, count } => Self::find_table(tables, table)?.rows.len() == *count,
            Rule::AllTrue { table, column } => Self::column_cells(tables, table, column)?
                .iter()
                .all(|c| *c == Cell::Bool(true)),
            Rule::AllEqual { table, column, value } => Self::column_cells(tables, table, column)?
                .iter()
                .all(|c| c.to_string() == *value),
            Rule::AnyDiffers { table, column, value } => Self::column_cells(tables, table, column)?
                .iter()
                .any(|c| c.to_string() != *value),
            Rule::Constant { table, column } => {
                let cells = Self::column_cells(tables, table, column)?;
                cells.windows(2).all(|w| w[0] == w[1])
            }
            Rule::ColumnsLe { table, lhs, rhs } => {
                let l = Self::column_cells(tables, table, lhs)?;
                let r = Self::column_cells(tables, table, rhs)?;
                let mut ok = true;
                for (a, b) in l.iter().zip(&r) {
                    ok &= Self::num(a)? <= Self::num(b)?;
                }
                ok
            }
            Rule::CellEquals { cell, value } => Self::lookup(tables, cell)?.to_string() == *value,
            Rule::Same { lhs, rhs } => Self::lookup(tables, lhs)? == Self::lookup(tables, rhs)?,
            Rule::Less { lhs, rhs } => Self::num(&Self::lookup(tables, lhs)?)? < Self::num(&Self::lookup(tables, rhs)?)?,
            Rule::All { rules } => {
                let mut ok = true;
                for r in rules {
                    ok &= Self::eval(tables, r)?;
                }
                ok
            }
        })
    }

    /// Evaluates every finding against the current tables.
    pub fn evaluate_findings(&self) -> Result<Vec<(String, bool)>> {
        let tables = self.all_tables();
        self.findings
            .iter()
            .map(|f| Ok((f.name.clone(), Self::eval(&tables, &f.rule)?)))
            .collect()
    }

    pub fn finding_value(&self, name: &str) -> Option<bool> {
        self.evaluate_findings()
            .ok()?
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }

    /// True when every headline certificate holds.
    pub fn headline_ok(&self) -> bool {
        self.certificates.iter().filter(|c| c.headline).all(|c| c.certificate.verdict)
    }

    pub fn to_json(&self) -> Result<String> {
        let findings: serde_json::Map<String, Json> = self
            .evaluate_findings()?
            .into_iter()
            .map(|(k, v)| (k, Json::Bool(v)))
            .collect();
        let certificates: Vec<Json> = self
            .certificates
            .iter()
            .map(|c| json!({"label": c.label, "headline": c.headline, "certificate": c.certificate}))
            .collect();
        let doc = json!({
            "scenario": self.scenario,
            "parameters": self.parameters.iter().map(|(k, v)| json!([k, v])).collect::<Vec<_>>(),
            "tables": self.all_tables(),
            "certificates": certificates,
            "findings": findings,
            "rules": self.findings,
            "notes": self.notes,
        });
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn to_markdown(&self) -> Result<String> {
        let mut out = format!("# {}\n\n", self.scenario);
        if !self.parameters.is_empty() {
            out.push_str("| parameter | value |\n|---|---|\n");
            for (k, v) in &self.parameters {
                out.push_str(&format!("| {k} | {v} |\n"));
            }
            out.push('\n');
        }
        for t in self.all_tables() {
            out.push_str(&format!("## {}\n\n", t.name));
            out.push_str(&format!("| {} |\n", t.columns.join(" | ")));
            out.push_str(&format!("|{}\n", "---|".repeat(t.columns.len())));
            for r in &t.rows {
                let cells: Vec<String> = r.iter().map(|c| c.to_string()).collect();
                out.push_str(&format!("| {} |\n", cells.join(" | ")));
            }
            out.push('\n');
        }
        for c in &self.certificates {
            out.push_str(&format!("## certificate: {}\n\n{}\n", c.label, c.certificate.to_markdown()));
        }
        out.push_str("## findings\n\n| finding | value |\n|---|---|\n");
        for (k, v) in self.evaluate_findings()? {
            out.push_str(&format!("| {k} | {v} |\n"));
        }
        if !self.notes.is_empty() {
            out.push_str("\n## notes\n\n");
            for n in &self.notes {
                out.push_str(&format!("- {n}\n"));
            }
        }
        Ok(out)
    }

    /// One CSV section per table, headed by `# <name>`, then the findings.
    pub fn to_csv(&self) -> Result<String> {
        let field = |s: String| {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s
            }
        };
        let mut out = format!("# scenario\n{}\n", field(self.scenario.clone()));
        out.push_str("# parameters\nparameter,value\n");
        for (k, v) in &self.parameters {
            out.push_str(&format!("{},{}\n", field(k.clone()), field(v.clone())));
        }
        for t in self.all_tables() {
            out.push_str(&format!("# {}\n", t.name));
            out.push_str(&t.columns.iter().cloned().map(field).collect::<Vec<_>>().join(","));
            out.push('\n');
            for r in &t.rows {
                out.push_str(&r.iter().map(|c| field(c.to_string())).collect::<Vec<_>>().join(","));
                out.push('\n');
            }
        }
        out.push_str("# findings\nfinding,value\n");
        for (k, v) in self.evaluate_findings()? {
            out.push_str(&format!("{k},{v}\n"));
        }
        Ok(out)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Md => self.to_markdown(),
            Format::Json => self.to_json(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Md,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Md => "md",
            Format::Json => "json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "md" => Ok(Format::Md),
            "json" => Ok(Format::Json),
            other => Err(Error::Definition(format!("unknown format {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn sample() -> Report {
        let mut r = Report::new("demo");
        let mut t = Table::new("values", &["name", "x", "y"]);
        t.push(vec!["a".into(), q(1, 3).into(), q(1, 2).into()]);
        t.push(vec!["b".into(), q(1, 2).into(), q(1, 2).into()]);
        r.table(t);
        r.table(Table::new("empty", &["k"]));
        r.finding("xBelowY", Rule::ColumnsLe { table: "values".into(), lhs: "x".into(), rhs: "y".into() });
        r.finding("nothingFound", Rule::Empty { table: "empty".into() });
        r.finding(
            "aLess",
            Rule::Less {
                lhs: cell("values", "a", "x"),
                rhs: cell("values", "b", "x"),
            },
        );
        r
    }

    #[test]
    fn findings_follow_tables() {
        let mut r = sample();
        assert_eq!(r.finding_value("xBelowY"), Some(true));
        r.tables[0].rows[1][1] = q(2, 3).into();
        assert_eq!(r.finding_value("xBelowY"), Some(false));
        assert_eq!(r.finding_value("nothingFound"), Some(true));
    }

    #[test]
    fn formats_share_rational_text() {
        let r = sample();
        for f in [Format::Csv, Format::Md, Format::Json] {
            let text = r.render(f).unwrap();
            assert!(text.contains("1/3"), "{f:?}");
        }
    }
}
