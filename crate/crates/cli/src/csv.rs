//! CSV tables with a provenance line and `#` footer lines.

use std::fmt::Write as _;

/// Fixed-precision rendering so output is byte-stable across runs.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.12e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "na".into(), num)
}

pub fn flag(b: bool) -> String {
    b.to_string()
}

pub fn opt_flag(b: Option<bool>) -> String {
    b.map_or_else(|| "na".into(), flag)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    footer: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), footer: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    /// Adds a `# key=value ...` line after the rows.
    pub fn note(&mut self, line: impl Into<String>) {
        self.footer.push(line.into());
    }

    pub fn render(&self, digest: &str, seed: u64) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# config_digest={digest} seed={seed}");
        let _ = writeln!(out, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        for f in &self.footer {
            let _ = writeln!(out, "# {f}");
        }
        out
    }
}

/// A parsed CSV report.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvDoc {
    pub digest: String,
    pub seed: u64,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub footer: Vec<String>,
}

impl CsvDoc {
    pub fn parse(text: &str) -> Option<Self> {
        let mut lines = text.lines();
        let meta = lines.next()?.strip_prefix("# ")?;
        let mut digest = None;
        let mut seed = None;
        for part in meta.split_whitespace() {
            match part.split_once('=') {
                Some(("config_digest", d)) => digest = Some(d.to_string()),
                Some(("seed", s)) => seed = s.parse().ok(),
                _ => {}
            }
        }
        let columns: Vec<String> = lines.next()?.split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        let mut footer = Vec::new();
        for l in lines {
            match l.strip_prefix("# ") {
                Some(f) => footer.push(f.to_string()),
                None => rows.push(l.split(',').map(str::to_string).collect()),
            }
        }
        Some(CsvDoc { digest: digest?, seed: seed?, columns, rows, footer })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Column `name` of every row.
    pub fn get(&self, name: &str) -> Vec<&str> {
        let c = self.column(name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[c].as_str()).collect()
    }

    pub fn floats(&self, name: &str) -> Vec<f64> {
        self.get(name).iter().map(|v| v.parse().unwrap_or(f64::NAN)).collect()
    }

    /// Value of `key=` in the footer.
    pub fn footer_value(&self, key: &str) -> Option<&str> {
        self.footer.iter().flat_map(|l| l.split_whitespace()).find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut t = Table::new(&["k", "x", "ok"]);
        t.push(vec!["1".into(), num(0.25), flag(true)]);
        t.push(vec!["2".into(), opt(None), opt_flag(Some(false))]);
        t.note("slope=0.5 ok=true");
        let text = t.render("abc", 9);
        assert!(text.starts_with("# config_digest=abc seed=9\nk,x,ok\n1,2.500000000000e-1,true\n"));
        let d = CsvDoc::parse(&text).unwrap();
        assert_eq!((d.digest.as_str(), d.seed), ("abc", 9));
        assert_eq!(d.floats("x")[0], 0.25);
        assert_eq!(d.get("ok"), ["true", "false"]);
        assert_eq!(d.footer_value("slope"), Some("0.5"));
        assert_eq!(d.footer_value("ok"), Some("true"));
    }
}
