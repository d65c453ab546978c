use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// CSV artifact: comment header with the version, seed, config hash and every
/// resolved setting, followed by the table.
pub struct Artifact {
    settings: Vec<(String, String)>,
    notes: Vec<(String, String)>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    seed: u64,
    command: String,
}

impl Artifact {
    pub fn new(command: &str, seed: u64, settings: Vec<(String, String)>, columns: &[&'static str]) -> Self {
        Self {
            settings,
            notes: Vec::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
            seed,
            command: command.to_string(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    /// Result metadata written after the settings, e.g. warning counters.
    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.command.as_bytes());
        for (k, v) in &self.settings {
            h.update(b"\n");
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn render(&self) -> CliResult<Vec<u8>> {
        let mut out = Vec::new();
        let fail = |e: std::io::Error| CliError::Numeric(e.to_string());
        writeln!(
            out,
            "# occflow {} command={} seed={} config_hash={}",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.seed,
            self.config_hash()
        )
        .map_err(fail)?;
        for (k, v) in self.settings.iter().chain(&self.notes) {
            writeln!(out, "# {k}={v}").map_err(fail)?;
        }
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&self.columns).map_err(|e| CliError::Numeric(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| CliError::Numeric(e.to_string()))?;
        }
        w.flush().map_err(fail)?;
        drop(w);
        Ok(out)
    }

    /// Writes to `path`, or to stdout without one.
    pub fn emit(&self, path: Option<&Path>) -> CliResult<()> {
        let bytes = self.render()?;
        match path {
            Some(p) => std::fs::write(p, bytes)
                .map_err(|e| CliError::Numeric(format!("cannot write {}: {e}", p.display()))),
            None => std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| CliError::Numeric(e.to_string())),
        }
    }
}

/// `value` with the shortest representation that reads back exactly.
pub fn num(v: f64) -> String {
    format!("{v}")
}
