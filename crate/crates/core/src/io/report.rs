//! Plain-text run report. Everything except the resolved config is a TOML
//! comment, so the report can be passed back as `--config`.

use std::fmt::Write;

use crate::error::Result;
use crate::io::commands::Command;
use crate::io::config::RunConfig;
use crate::io::data::fmt_sig;

#[derive(Debug, Clone)]
pub struct Report {
    command: Command,
    seed: u64,
    results: Vec<(String, f64)>,
    warnings: Vec<String>,
    artifacts: Vec<String>,
}

impl Report {
    pub fn new(command: Command, seed: u64) -> Self {
        Self {
            command,
            seed,
            results: Vec::new(),
            warnings: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn result(&mut self, key: &str, value: f64) {
        self.results.push((key.to_string(), value));
    }

    pub fn warn(&mut self, msg: &str) {
        log::warn!("{msg}");
        self.warnings.push(msg.replace('\n', " "));
    }

    pub fn artifact(&mut self, name: &str) {
        self.artifacts.push(name.to_string());
    }

    pub fn artifacts(&self) -> &[String] {
        &self.artifacts
    }

    pub fn render(&self, resolved: &RunConfig) -> Result<String> {
        let mut s = String::new();
        let _ = writeln!(s, "# qreadout {} report", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(s, "# seed: {}", self.seed);
        let _ = writeln!(s, "# rerun: qreadout {} --config <this file>", self.command);
        let _ = writeln!(s, "#");
        let _ = writeln!(s, "# results");
        for (k, v) in &self.results {
            let _ = writeln!(s, "#   {k} = {}", fmt_sig(*v));
        }
        if !self.warnings.is_empty() {
            let _ = writeln!(s, "# warnings");
            for w in &self.warnings {
                let _ = writeln!(s, "#   {w}");
            }
        }
        let _ = writeln!(s, "# artifacts");
        for a in &self.artifacts {
            let _ = writeln!(s, "#   {a}");
        }
        let _ = writeln!(s, "#");
        let _ = writeln!(s, "# resolved configuration");
        s.push_str(&resolved.to_toml()?);
        Ok(s)
    }
}
