//! One document per command, rendered as an aligned table, JSON or CSV.

use crate::config::Format;
use serde_json::Value;

pub struct Doc {
    pub json: Value,
    pub table: String,
    /// Header row first.
    pub csv: Vec<Vec<String>>,
}

impl Doc {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.table.clone(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("documents serialize");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for row in &self.csv {
                    w.write_record(row).expect("in-memory writes succeed");
                }
                String::from_utf8(w.into_inner().expect("in-memory writes succeed")).expect("fields are UTF-8")
            }
        }
    }
}

/// Columns padded to the widest cell; the last column is not padded.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut s = String::new();
        for (i, c) in cells.enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            s.push_str(c);
            if i + 1 < widths.len() {
                s.extend(std::iter::repeat(' ').take(widths[i] - c.chars().count()));
            }
        }
        s.truncate(s.trim_end().len());
        s.push('\n');
        s
    };
    let mut out = line(&mut headers.iter().copied());
    for r in rows {
        out.push_str(&line(&mut r.iter().map(String::as_str)));
    }
    out
}

/// Fixed six decimals for tables.
pub fn fix(v: f64) -> String {
    format!("{v:.6}")
}

pub fn opt_fix(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), fix)
}

/// Shortest round-trip form, switching to exponent notation outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// Two-significant-digit scientific notation for error estimates.
pub fn sci(v: f64) -> String {
    format!("{v:.1e}")
}

pub fn kv(pairs: &[(&str, String)]) -> String {
    let w = pairs.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    pairs
        .iter()
        .map(|(k, v)| format!("{k}{}  {v}\n", " ".repeat(w - k.chars().count())))
        .collect()
}
