//! report.json: resolved config, verdict block, command results.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictBlock {
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub config: RunConfig,
    pub verdict: VerdictBlock,
    pub warnings: Vec<String>,
    pub results: serde_json::Map<String, Value>,
    /// Output files relative to the report's directory.
    pub files: Vec<String>,
}

impl Report {
    pub fn new(config: RunConfig) -> Self {
        let warnings = config.resolution_warnings();
        Report {
            config,
            verdict: VerdictBlock { passed: true, checks: Vec::new() },
            warnings,
            results: serde_json::Map::new(),
            files: Vec::new(),
        }
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.verdict.passed &= passed;
        self.verdict.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or_else(|e| Value::String(format!("unserializable: {e}")));
        self.results.insert(key.into(), v);
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    /// Path for an output file, recorded in the report.
    pub fn file(&mut self, name: &str) -> PathBuf {
        self.files.push(name.into());
        self.config.out.join(name)
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join("report.json");
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }

    /// Key/value summary for the terminal.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for w in &self.warnings {
            s.push_str(&format!("warning: {w}\n"));
        }
        for c in &self.verdict.checks {
            s.push_str(&format!("{:<28} {}  {}\n", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail));
        }
        s.push_str(&format!("verdict: {}\n", if self.verdict.passed { "PASS" } else { "FAIL" }));
        s
    }
}
