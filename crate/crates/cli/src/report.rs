//! Versioned JSON report and its text rendering.
//!
//! Every number shown to the user is formatted into a string when the report is built,
//! so rendering a saved report reproduces the original output byte for byte.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt::Write as _;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    /// The parsed command line, echoed verbatim.
    pub config: Value,
    pub seed: Option<u64>,
    pub structure: Option<StructureSummary>,
    /// `CD(ρ₁, ρ₂, κ, d)` as exact rationals.
    pub params: Option<String>,
    pub checks: Vec<CheckEntry>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureSummary {
    pub name: String,
    pub d: usize,
    pub h: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    /// The statement being tested, in words.
    pub anchor: String,
    pub passed: bool,
    /// Shown but never counted towards `passed`.
    #[serde(default)]
    pub informational: bool,
    pub summary: String,
    #[serde(default)]
    pub lines: Vec<String>,
    /// Machine-readable payload (validation or estimate report, counterexample, ...).
    #[serde(default)]
    pub detail: Value,
}

impl CheckEntry {
    pub fn new(name: &str, anchor: &str, passed: bool, summary: impl Into<String>) -> Self {
        CheckEntry {
            name: name.to_string(),
            anchor: anchor.to_string(),
            passed,
            informational: false,
            summary: summary.into(),
            lines: Vec::new(),
            detail: Value::Null,
        }
    }

    pub fn line(mut self, l: impl Into<String>) -> Self {
        self.lines.push(l.into());
        self
    }

    pub fn detail(mut self, v: impl Serialize) -> Self {
        self.detail = serde_json::to_value(v).expect("report payloads serialize");
        self
    }
}

impl Report {
    pub fn new(command: &str, config: Value, seed: Option<u64>) -> Self {
        Report {
            schema: SCHEMA,
            tool: "tcd".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            seed,
            structure: None,
            params: None,
            checks: Vec::new(),
            passed: true,
        }
    }

    pub fn push(&mut self, c: CheckEntry) {
        if !c.informational && !c.passed {
            self.passed = false;
        }
        self.checks.push(c);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let r: Report = serde_json::from_str(text).map_err(|e| format!("not a tcd report: {e}"))?;
        if r.schema != SCHEMA {
            return Err(format!("unsupported report schema {} (expected {SCHEMA})", r.schema));
        }
        Ok(r)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let seed = self.seed.map(|s| format!(", seed {s}")).unwrap_or_default();
        let _ = writeln!(out, "{} {}: {}{seed}", self.tool, self.version, self.command);
        if let Some(s) = &self.structure {
            let _ = writeln!(out, "structure: {} (d = {}, h = {})", s.name, s.d, s.h);
        }
        if let Some(p) = &self.params {
            let _ = writeln!(out, "parameters: {p}");
        }
        for c in &self.checks {
            let tag = match (c.informational, c.passed) {
                (true, _) => "INFO",
                (false, true) => "PASS",
                (false, false) => "FAIL",
            };
            let _ = writeln!(out, "[{tag}] {}: {}", c.name, c.summary);
            if !c.anchor.is_empty() {
                let _ = writeln!(out, "       tests: {}", c.anchor);
            }
            for l in &c.lines {
                let _ = writeln!(out, "       {l}");
            }
        }
        let _ = writeln!(out, "result: {}", if self.passed { "PASS" } else { "FAIL" });
        out
    }
}
