use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::CliResult;

/// Named columns and rows of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Where a table came from. Every field but the timestamp is a function of
/// the inputs.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub command: String,
    pub config_sha256: Option<String>,
    pub backend: String,
    pub seed: u64,
}

/// Floats print in Rust's shortest round-trip form, which never depends on locale.
pub fn cell_f64(v: f64) -> String {
    format!("{v}")
}

pub fn cell_opt(v: Option<f64>) -> String {
    v.map(cell_f64).unwrap_or_default()
}

pub fn render(table: &ResultTable, prov: &Provenance) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(out, "# tool: hitchin {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# command: {}", prov.command)?;
    if let Some(h) = &prov.config_sha256 {
        writeln!(out, "# config_sha256: {h}")?;
    }
    writeln!(out, "# backend: {}", prov.backend)?;
    writeln!(out, "# seed: {}", prov.seed)?;
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    writeln!(out, "# generated_unix: {now}")?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    Ok(out)
}

/// Write to `path`, or to stdout when there is none.
pub fn emit(bytes: &[u8], path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_precedes_the_rows() {
        let mut t = ResultTable::new(&["step", "K"]);
        t.push(vec!["0".into(), cell_f64(0.5)]);
        let prov = Provenance {
            command: "kbound".into(),
            config_sha256: Some("ab".into()),
            backend: "float64".into(),
            seed: 0,
        };
        let text = String::from_utf8(render(&t, &prov).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# tool: hitchin "));
        assert_eq!(&lines[lines.len() - 2..], ["step,K", "0,0.5"]);
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        assert_eq!(r.headers().unwrap(), vec!["step", "K"]);
    }
}
