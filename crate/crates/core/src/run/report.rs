//! Machine-readable run reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::eigensolve::group_eigenvalues;
use crate::fibers::DirectIntegralDecomposition;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    pub max_error: f64,
    pub tolerance: f64,
    /// Number of evaluations folded into `max_error`.
    pub cases: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
}

impl CheckResult {
    /// Passes iff `max_error` is finite and at most `tolerance`.
    pub fn new(name: impl Into<String>, max_error: f64, tolerance: f64, cases: usize) -> Self {
        let status = if max_error.is_finite() && max_error <= tolerance { Status::Pass } else { Status::Fail };
        Self { name: name.into(), status, max_error, tolerance, cases, values: BTreeMap::new() }
    }

    pub fn with_value(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub lambda: f64,
    pub multiplicity: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch; omitted when suppressed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub config: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub status: Status,
    pub metadata: Metadata,
    pub spectrum: Vec<SpectrumEntry>,
    pub checks: Vec<CheckResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gasket: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(command: &str, config: BTreeMap<String, String>, inputs: BTreeMap<String, String>) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            command: command.to_string(),
            status: Status::Pass,
            metadata: Metadata {
                tool: "eigexpand".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                timestamp: None,
                config,
                inputs,
            },
            spectrum: Vec::new(),
            checks: Vec::new(),
            gasket: None,
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, check: CheckResult) {
        self.checks.push(check);
        self.refresh_status();
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = CheckResult>) {
        self.checks.extend(checks);
        self.refresh_status();
    }

    fn refresh_status(&mut self) {
        self.status = if self.checks.iter().all(CheckResult::passed) { Status::Pass } else { Status::Fail };
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed())
    }

    /// Stamps the current wall-clock time.
    pub fn stamp_now(&mut self) {
        self.metadata.timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Spectrum block of a decomposition: one entry per atom.
pub fn spectrum_of(dec: &DirectIntegralDecomposition<f64>) -> Vec<SpectrumEntry> {
    dec.fibers()
        .iter()
        .enumerate()
        .map(|(i, f)| SpectrumEntry { lambda: f.lambda(), multiplicity: f.dim(), mass: dec.mass(i) })
        .collect()
}

/// Spectrum block from raw sorted eigenvalues, grouped with unit masses.
pub fn spectrum_of_values(values: &[f64], tol_group: f64) -> Vec<SpectrumEntry> {
    match group_eigenvalues(values, tol_group) {
        Ok(g) => g
            .groups
            .iter()
            .map(|g| SpectrumEntry { lambda: g.value, multiplicity: g.multiplicity(), mass: 1.0 })
            .collect(),
        Err(_) => Vec::new(),
    }
}
