//! Pass/fail bookkeeping shared by the library witnesses and the CLI.

use std::collections::BTreeMap;

use serde::Serialize;

/// One named check: gap statistics over the evaluated points against a
/// tolerance. A non-finite gap never passes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub max_gap: f64,
    pub mean_gap: f64,
    pub tol: f64,
    pub pass: bool,
    pub points_evaluated: usize,
    pub points_skipped: usize,
}

impl Check {
    pub fn from_gaps(name: impl Into<String>, gaps: &[f64], tol: f64, skipped: usize) -> Self {
        let max_gap = gaps.iter().fold(0.0_f64, |m, &g| if g.is_nan() || m.is_nan() { f64::NAN } else { m.max(g) });
        let mean_gap = if gaps.is_empty() { 0.0 } else { gaps.iter().sum::<f64>() / gaps.len() as f64 };
        Self {
            name: name.into(),
            max_gap,
            mean_gap,
            tol,
            pass: !gaps.is_empty() && max_gap.is_finite() && max_gap <= tol,
            points_evaluated: gaps.len(),
            points_skipped: skipped,
        }
    }

    /// A single scalar compared against a tolerance.
    pub fn scalar(name: impl Into<String>, gap: f64, tol: f64) -> Self {
        Self::from_gaps(name, &[gap], tol, 0)
    }
}

/// Checks plus named scalar outputs (fitted constants, reported quantities).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub values: BTreeMap<String, f64>,
}

impl VerificationReport {
    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn record(&mut self, name: impl Into<String>, v: f64) {
        self.values.insert(name.into(), v);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
        self.values.extend(other.values);
    }

    pub fn overall_pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}
