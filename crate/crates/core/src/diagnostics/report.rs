use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{DsbError, Result};
use crate::table::{fmt_f64, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Row {
    pub fn new(label: impl Into<String>, estimate: f64, stderr: f64, n: usize) -> Self {
        Self {
            label: label.into(),
            estimate,
            stderr,
            n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub tolerance: f64,
    /// Quantity compared against the tolerance.
    pub value: f64,
    pub pass: bool,
    pub status: Outcome,
}

impl Verdict {
    pub fn new(check: impl Into<String>, tolerance: f64, value: f64, pass: bool) -> Self {
        Self {
            check: check.into(),
            tolerance,
            value,
            pass,
            status: if pass { Outcome::Pass } else { Outcome::Fail },
        }
    }

    pub fn inconclusive(check: impl Into<String>, tolerance: f64, value: f64) -> Self {
        Self {
            check: check.into(),
            tolerance,
            value,
            pass: false,
            status: Outcome::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub probe: String,
    pub config_digest: String,
    pub rows: Vec<Row>,
    pub verdicts: Vec<Verdict>,
    pub seed: u64,
    /// Wall-clock time; left empty in artifacts that must be reproducible.
    pub runtime_seconds: Option<f64>,
}

impl DiagnosticsReport {
    pub fn new(probe: &str, config_digest: String, seed: u64) -> Self {
        Self {
            probe: probe.into(),
            config_digest,
            rows: Vec::new(),
            verdicts: Vec::new(),
            seed,
            runtime_seconds: None,
        }
    }

    pub fn row(&self, label: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn verdict(&self, check: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.check == check)
    }

    /// Fail if any verdict failed, else inconclusive if any was, else pass.
    pub fn outcome(&self) -> Outcome {
        if self.verdicts.iter().any(|v| v.status == Outcome::Fail) {
            Outcome::Fail
        } else if self.verdicts.iter().any(|v| v.status == Outcome::Inconclusive) {
            Outcome::Inconclusive
        } else {
            Outcome::Pass
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| DsbError::Input(format!("report encoding failed: {e}")))
    }

    pub fn rows_table(&self) -> Table {
        let mut t = Table::new(["probe", "label", "estimate", "stderr", "n"].map(String::from).to_vec());
        for r in &self.rows {
            t.push(vec![
                self.probe.clone(),
                r.label.clone(),
                fmt_f64(r.estimate),
                fmt_f64(r.stderr),
                r.n.to_string(),
            ]);
        }
        t
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "probe {} (seed {}, config {})", self.probe, self.seed, self.config_digest);
        let width = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(5).max(5);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "  {:<width$}  {:>12.6}  +- {:<10.3e}  n={}",
                r.label, r.estimate, r.stderr, r.n
            );
        }
        for v in &self.verdicts {
            let tag = match v.status {
                Outcome::Pass => "PASS",
                Outcome::Fail => "FAIL",
                Outcome::Inconclusive => "INCONCLUSIVE",
            };
            let _ = writeln!(s, "  [{tag}] {} (value {}, tolerance {})", v.check, fmt_f64(v.value), fmt_f64(v.tolerance));
        }
        if let Some(t) = self.runtime_seconds {
            let _ = writeln!(s, "  runtime {t:.2}s");
        }
        s
    }
}
