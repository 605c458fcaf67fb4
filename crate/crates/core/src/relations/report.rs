use std::collections::BTreeMap;

use serde::Serialize;

/// Absolute slack on every `≤ ϖ` comparison made by the sample validators.
pub const SAMPLE_TOL: f64 = 1e-9;

/// Tally for one clause. A margin is `lhs − rhs` of the checked inequality,
/// so non-positive means satisfied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseStats {
    pub checked: usize,
    pub failed: usize,
    pub worst_margin: f64,
    pub counterexample: Option<String>,
}

impl Default for ClauseStats {
    fn default() -> Self {
        Self { checked: 0, failed: 0, worst_margin: f64::NEG_INFINITY, counterexample: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Tally(pub BTreeMap<String, ClauseStats>);

impl Tally {
    pub fn with(clauses: &[&str]) -> Self {
        Tally(clauses.iter().map(|c| (c.to_string(), ClauseStats::default())).collect())
    }

    /// Records one check; `what` is only rendered on the first failure.
    pub fn record(&mut self, clause: &str, margin: f64, what: impl FnOnce() -> String) {
        let s = self.0.entry(clause.to_string()).or_default();
        s.checked += 1;
        if margin > s.worst_margin || s.worst_margin.is_nan() {
            s.worst_margin = margin;
        }
        if !(margin <= SAMPLE_TOL) {
            s.failed += 1;
            if s.counterexample.is_none() {
                s.counterexample = Some(what());
            }
        }
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        for (k, o) in other.0 {
            let s = self.0.entry(k).or_default();
            s.checked += o.checked;
            s.failed += o.failed;
            if o.worst_margin > s.worst_margin {
                s.worst_margin = o.worst_margin;
            }
            if s.counterexample.is_none() {
                s.counterexample = o.counterexample;
            }
        }
        self
    }

    pub fn failures(&self) -> usize {
        self.0.values().map(|s| s.failed).sum()
    }

    /// Failures of every clause whose name starts with `prefix`.
    pub fn failures_of(&self, prefix: &str) -> usize {
        self.0.iter().filter(|(k, _)| k.starts_with(prefix)).map(|(_, s)| s.failed).sum()
    }

    pub fn get(&self, clause: &str) -> Option<&ClauseStats> {
        self.0.get(clause)
    }
}
