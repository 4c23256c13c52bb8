use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn num(x: f64) -> String {
    let r = round12(x);
    if r != 0.0 && (r.abs() < 1e-4 || r.abs() >= 1e12) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

/// Rounds every number in a JSON tree to 12 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(round12(x)))
            .map(Value::Number)
            .unwrap_or(Value::Null),
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Rows of text cells under a header.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn csv(&self) -> String {
        let quote = |c: &String| if c.contains([',', '"', '\n']) { format!("\"{}\"", c.replace('"', "\"\"")) } else { c.clone() };
        let mut out = String::new();
        for row in std::iter::once(&self.headers).chain(&self.rows) {
            out.push_str(&row.iter().map(quote).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    pub fn text(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.len()).collect();
        for row in &self.rows {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |row: &[String]| {
            let cells: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            cells.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&self.headers);
        out.push_str(&line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
        for row in &self.rows {
            out.push_str(&line(row));
        }
        out
    }
}

/// A command's result in both machine and human shapes.
pub struct Report {
    pub json: Value,
    pub table: Table,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(&round_json(self.json.clone())).expect("serialisable") + "\n",
            Format::Csv => self.table.csv(),
            Format::Table => self.table.text(),
        }
    }
}

/// Files to write once the command has finished.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, path: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) {
        self.files.push((path.into(), bytes.into()));
    }

    /// Writes every file through a temporary sibling and a rename, so a
    /// failed run leaves no partial files behind.
    pub fn commit(self) -> Result<()> {
        let mut staged = Vec::new();
        for (path, bytes) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            }
            let tmp = temp_sibling(path);
            let mut f = fs::File::create(&tmp).with_context(|| format!("cannot write {}", path.display()))?;
            f.write_all(bytes).with_context(|| format!("cannot write {}", path.display()))?;
            staged.push((tmp, path));
        }
        for (tmp, path) in staged {
            fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))?;
        }
        Ok(())
    }
}

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.{}.tmp", std::process::id()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
        assert_eq!(num(2.0 / 3.0), "0.666666666667");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(1.25e-7), "1.25e-7");
        let v = round_json(serde_json::json!({"a": [0.1234567890123456, 2], "b": "x"}));
        assert_eq!(v.to_string(), r#"{"a":[0.123456789012,2],"b":"x"}"#);
    }

    #[test]
    fn table_shapes() {
        let mut t = Table::new(&["name", "value"]);
        t.push(vec!["a,b".into(), "1".into()]);
        assert_eq!(t.csv(), "name,value\n\"a,b\",1\n");
        assert!(t.text().starts_with("name  value\n----  -----\na,b   1\n"));
    }
}
