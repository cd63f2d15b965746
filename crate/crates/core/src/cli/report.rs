use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = ">")]
    Above,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Below => "<",
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Above => ">",
        }
    }

    pub fn holds(self, value: f64, limit: f64) -> bool {
        match self {
            Relation::Below => value < limit,
            Relation::AtMost => value <= limit,
            Relation::AtLeast => value >= limit,
            Relation::Above => value > limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation,
            limit,
            passed: relation.holds(value, limit),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    pub error: Option<String>,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
}

impl SuiteReport {
    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

impl Summary {
    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dualchart summary (seed {})", self.seed);
        for suite in &self.suites {
            let _ = writeln!(out);
            let verdict = if suite.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "[{verdict}] {}", suite.name);
            if let Some(e) = &suite.error {
                let _ = writeln!(out, "  error: {e}");
            }
            for c in &suite.checks {
                let mark = if c.passed { "ok  " } else { "FAIL" };
                let _ = writeln!(
                    out,
                    "  {mark} {} = {:e} ({} {:e})",
                    c.name,
                    c.value,
                    c.relation.symbol(),
                    c.limit
                );
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "overall: {}", if self.passed { "PASS" } else { "FAIL" });
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| crate::error::Error::Format(e.to_string()))?;
        std::fs::write(dir.join("summary.json"), json + "\n")?;
        std::fs::write(dir.join("summary.txt"), self.to_text())?;
        Ok(())
    }
}
