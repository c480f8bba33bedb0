//! Column-ordered result tables written as CSV or JSON.

use std::fmt::Write as _;

pub const VERSION_LINE: &str = concat!("imdd ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::Num)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => v.to_string(),
            Cell::Num(_) | Cell::Empty => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into),
            Cell::Int(v) => (*v).into(),
            Cell::Text(s) => s.clone().into(),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Appends an `error` column holding `errors[i]` for row `i`, only when
    /// at least one row failed.
    pub fn with_errors(mut self, errors: &[Option<String>]) -> Self {
        if errors.iter().any(Option::is_some) {
            self.columns.push("error".into());
            for (row, e) in self.rows.iter_mut().zip(errors) {
                row.push(e.clone().map_or(Cell::Empty, Cell::Text));
            }
        }
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
        format!("# {VERSION_LINE}\n{body}")
    }

    fn to_json(&self) -> String {
        let mut out = String::new();
        let key = |s: &str| serde_json::to_string(s).expect("string");
        let _ = write!(out, "{{\n  \"version\": {},\n  \"rows\": [", key(VERSION_LINE));
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str(if i == 0 { "\n    {" } else { ",\n    {" });
            for (j, (c, v)) in self.columns.iter().zip(row).enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{}: {}", key(c), v.json());
            }
            out.push('}');
        }
        out.push_str(if self.rows.is_empty() { "]\n}\n" } else { "\n  ]\n}\n" });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["pulse", "alpha", "n"]);
        t.push(vec!["rc".into(), 0.6.into(), 3usize.into()]);
        t.push(vec!["s2".into(), Cell::Empty, 1usize.into()]);
        t
    }

    #[test]
    fn csv_has_version_comment() {
        let s = sample().render(Format::Csv);
        assert_eq!(s, format!("# {VERSION_LINE}\npulse,alpha,n\nrc,0.6,3\ns2,,1\n"));
    }

    #[test]
    fn json_keeps_column_order() {
        let s = sample().render(Format::Json);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["version"], VERSION_LINE);
        assert_eq!(v["rows"][0]["alpha"], 0.6);
        assert!(v["rows"][1]["alpha"].is_null());
        assert!(s.find("\"pulse\"").unwrap() < s.find("\"alpha\"").unwrap());
    }

    #[test]
    fn error_column_only_when_needed() {
        let t = sample().with_errors(&[None, None]);
        assert_eq!(t.columns.len(), 3);
        let t = sample().with_errors(&[None, Some("bad".into())]);
        assert_eq!(t.columns.last().unwrap(), "error");
        assert_eq!(t.rows[1][3], Cell::Text("bad".into()));
    }
}
