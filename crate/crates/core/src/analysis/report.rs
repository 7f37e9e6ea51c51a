//! Pass/fail bookkeeping shared by all verification checks.

use serde::Serialize;

use crate::rational::{format_rational, Rational};

const MAX_COUNTEREXAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub checked: usize,
    pub failures: usize,
    /// Smallest slack (bound minus observed value) over all checked items.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_slack: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub counterexamples: Vec<String>,
}

#[derive(Debug)]
pub(crate) struct Check {
    name: &'static str,
    checked: usize,
    failures: usize,
    min_slack: Option<Rational>,
    counterexamples: Vec<String>,
}

impl Check {
    pub(crate) fn new(name: &'static str) -> Check {
        Check {
            name,
            checked: 0,
            failures: 0,
            min_slack: None,
            counterexamples: Vec::new(),
        }
    }

    pub(crate) fn record(
        &mut self,
        ok: bool,
        slack: Option<Rational>,
        describe: impl FnOnce() -> String,
    ) {
        self.checked += 1;
        if let Some(s) = slack {
            if self.min_slack.as_ref().is_none_or(|m| &s < m) {
                self.min_slack = Some(s);
            }
        }
        if !ok {
            self.failures += 1;
            if self.counterexamples.len() < MAX_COUNTEREXAMPLES {
                self.counterexamples.push(describe());
            }
        }
    }

    pub(crate) fn fail(&mut self, describe: impl FnOnce() -> String) {
        self.record(false, None, describe);
    }

    pub(crate) fn finish(self) -> CheckOutcome {
        CheckOutcome {
            name: self.name.to_string(),
            passed: self.failures == 0,
            checked: self.checked,
            failures: self.failures,
            min_slack: self.min_slack.as_ref().map(format_rational),
            counterexamples: self.counterexamples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub instance: String,
    pub algorithm: String,
    pub depth: usize,
    pub alg_cost: String,
    pub opt_cost: String,
    pub ratio: String,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}
