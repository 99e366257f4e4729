//! Margin aggregation and the JSON report schema.

use serde::Serialize;

use crate::divergence::JsonReal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// margin ≥ −tol certifies the instance
    Inequality,
    /// |margin| ≤ tol certifies the instance
    Equality,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantiles {
    pub p1: JsonReal,
    pub p50: JsonReal,
    pub p99: JsonReal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    /// Re-derivable trial coordinates (cell and trial index).
    pub input: String,
    pub digest: String,
    pub margin: JsonReal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check_name: String,
    pub kind: CheckKind,
    pub trials: usize,
    /// Failed instances, including trials whose evaluation errored.
    pub violations: usize,
    pub errors: usize,
    pub min_margin: JsonReal,
    pub quantiles: Quantiles,
    pub seed: u64,
    pub tol: f64,
    pub config_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_trial: Option<Vec<TrialRecord>>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn min_margin(&self) -> f64 {
        self.min_margin.0
    }
}

/// Accumulates margins for one named check.
#[derive(Debug, Clone)]
pub struct MarginTally {
    pub name: String,
    pub kind: CheckKind,
    pub tol: f64,
    margins: Vec<f64>,
    violations: usize,
    errors: usize,
    records: Option<Vec<TrialRecord>>,
}

impl MarginTally {
    pub fn new(name: impl Into<String>, kind: CheckKind, tol: f64, record: bool) -> Self {
        MarginTally {
            name: name.into(),
            kind,
            tol,
            margins: Vec::new(),
            violations: 0,
            errors: 0,
            records: record.then(Vec::new),
        }
    }

    pub fn is_violation(&self, margin: f64) -> bool {
        match self.kind {
            CheckKind::Inequality => !(margin >= -self.tol),
            CheckKind::Equality => !(margin.abs() <= self.tol),
        }
    }

    /// Records one trial; returns true when it counts as a violation.
    pub fn push(&mut self, outcome: Option<f64>, input: impl FnOnce() -> (String, String)) -> bool {
        let violated = match outcome {
            Some(m) => {
                self.margins.push(m);
                self.is_violation(m)
            }
            None => {
                self.errors += 1;
                true
            }
        };
        if violated {
            self.violations += 1;
        }
        if let Some(records) = self.records.as_mut() {
            let (input, digest) = input();
            records.push(TrialRecord {
                input,
                digest,
                margin: JsonReal(outcome.unwrap_or(f64::NAN)),
            });
        }
        violated
    }

    pub fn finish(mut self, seed: u64, config_digest: &str) -> CheckReport {
        self.margins.sort_by(f64::total_cmp);
        let q = |p: f64| JsonReal(nearest_rank(&self.margins, p));
        CheckReport {
            check_name: self.name,
            kind: self.kind,
            trials: self.margins.len() + self.errors,
            violations: self.violations,
            errors: self.errors,
            min_margin: JsonReal(self.margins.first().copied().unwrap_or(f64::NAN)),
            quantiles: Quantiles {
                p1: q(1.0),
                p50: q(50.0),
                p99: q(99.0),
            },
            seed,
            tol: self.tol,
            config_digest: config_digest.to_string(),
            per_trial: self.records,
        }
    }
}

/// Nearest-rank percentile of sorted data; NaN when empty.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (p / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}
