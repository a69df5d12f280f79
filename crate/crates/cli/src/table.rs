//! Plain tables: aligned text or CSV, with `#` metadata lines.
//!
//! Grammar of an emitted document: tables separated by one blank line; each
//! table is zero or more `# key: value` lines, a header row, then data rows.
//! Text tables separate cells by runs of spaces (cells never contain spaces);
//! CSV tables by commas (cells never contain commas or quotes).

use std::fmt::Write as _;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self {
            meta: Vec::new(),
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    /// Cell in `column` of data row `row`.
    pub fn get(&self, row: usize, column: &str) -> Option<&str> {
        let j = self.headers.iter().position(|h| h == column)?;
        self.rows.get(row).map(|r| r[j].as_str())
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        match format {
            Format::Csv => {
                for row in std::iter::once(&self.headers).chain(&self.rows) {
                    let _ = writeln!(out, "{}", row.join(","));
                }
            }
            Format::Table => {
                let mut widths: Vec<usize> = self.headers.iter().map(|h| h.len()).collect();
                for row in &self.rows {
                    for (w, c) in widths.iter_mut().zip(row) {
                        *w = (*w).max(c.len());
                    }
                }
                for row in std::iter::once(&self.headers).chain(&self.rows) {
                    let line: Vec<String> = row
                        .iter()
                        .zip(&widths)
                        .enumerate()
                        .map(|(j, (c, &w))| {
                            if j == 0 {
                                format!("{c:<w$}")
                            } else {
                                format!("{c:>w$}")
                            }
                        })
                        .collect();
                    let _ = writeln!(out, "{}", line.join("  ").trim_end());
                }
            }
        }
        out
    }
}

pub fn render_all(tables: &[Table], format: Format) -> String {
    tables
        .iter()
        .map(|t| t.render(format))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Inverse of [`render_all`].
pub fn parse_tables(text: &str, format: Format) -> CliResult<Vec<Table>> {
    let mut tables = Vec::new();
    let mut current: Option<Table> = None;
    let split = |line: &str| -> Vec<String> {
        match format {
            Format::Csv => line.split(',').map(str::to_string).collect(),
            Format::Table => line.split_whitespace().map(str::to_string).collect(),
        }
    };
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            tables.extend(current.take());
            continue;
        }
        let t = current.get_or_insert_with(Table::default);
        if let Some(meta) = line.strip_prefix("# ") {
            if !t.headers.is_empty() {
                return Err(CliError::config(format!(
                    "line {}: metadata after header",
                    no + 1
                )));
            }
            let (k, v) = meta
                .split_once(": ")
                .ok_or_else(|| CliError::config(format!("line {}: malformed metadata", no + 1)))?;
            t.meta.push((k.to_string(), v.to_string()));
        } else if t.headers.is_empty() {
            t.headers = split(line);
        } else {
            let row = split(line);
            if row.len() != t.headers.len() {
                return Err(CliError::config(format!(
                    "line {}: {} cells under {} headers",
                    no + 1,
                    row.len(),
                    t.headers.len()
                )));
            }
            t.rows.push(row);
        }
    }
    tables.extend(current);
    Ok(tables)
}

/// Number formatting for data cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Digits(usize),
    Full,
}

impl Default for Precision {
    fn default() -> Self {
        Precision::Digits(3)
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "full" {
            return Ok(Precision::Full);
        }
        s.parse::<usize>()
            .map(Precision::Digits)
            .map_err(|_| format!("precision must be a digit count or `full`, got `{s}`"))
    }
}

impl Precision {
    pub fn fmt(self, v: f64) -> String {
        match self {
            Precision::Digits(d) => format!("{v:.d$}"),
            Precision::Full => format!("{v:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Table> {
        let mut a = Table::new(["r", "E_X^1", "M0_1"])
            .meta("model", "independent")
            .meta("d", 0.0005);
        a.push(vec!["1".into(), "0.010".into(), "6".into()]);
        a.push(vec!["10".into(), "2.738".into(), "9".into()]);
        let mut b = Table::new(["kind", "1", "2"]);
        b.push(vec!["minimal".into(), "2".into(), "-1".into()]);
        vec![a, b]
    }

    #[test]
    fn round_trip_both_formats() {
        for format in [Format::Table, Format::Csv] {
            let text = render_all(&sample(), format);
            assert_eq!(parse_tables(&text, format).unwrap(), sample());
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(parse_tables("a,b\n1\n", Format::Csv).is_err());
    }

    #[test]
    fn precision() {
        assert_eq!(Precision::default().fmt(2.7384), "2.738");
        assert_eq!(Precision::Full.fmt(0.1), "0.1");
        assert_eq!("full".parse::<Precision>().unwrap(), Precision::Full);
        assert_eq!("5".parse::<Precision>().unwrap(), Precision::Digits(5));
        assert!("x".parse::<Precision>().is_err());
    }
}
