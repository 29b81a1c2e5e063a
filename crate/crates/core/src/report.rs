//! Machine-readable verification reports.
//!
//! Identity checks throughout the engine are report-valued: a failing
//! identity is data (with a witness), not a process error. Reports are
//! deterministic for a fixed configuration apart from the timing fields.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Suite {
    pub suite: String,
    pub engine_version: String,
    pub config: serde_json::Value,
    pub checks: Vec<CheckResult>,
}

impl Suite {
    pub fn new(name: impl Into<String>) -> Self {
        Suite {
            suite: name.into(),
            engine_version: env!("CARGO_PKG_VERSION").into(),
            config: serde_json::Value::Null,
            checks: vec![],
        }
    }

    pub fn pass(&mut self, name: impl Into<String>) {
        self.checks.push(CheckResult {
            name: name.into(),
            status: Status::Pass,
            witness: None,
            timing_ms: None,
        });
    }

    pub fn fail(&mut self, name: impl Into<String>, witness: impl Into<String>) {
        self.checks.push(CheckResult {
            name: name.into(),
            status: Status::Fail,
            witness: Some(witness.into()),
            timing_ms: None,
        });
    }

    pub fn skip(&mut self, name: impl Into<String>, reason: impl Into<String>) {
        self.checks.push(CheckResult {
            name: name.into(),
            status: Status::Skipped,
            witness: Some(reason.into()),
            timing_ms: None,
        });
    }

    /// Record a boolean identity with an on-failure witness thunk.
    pub fn check(&mut self, name: impl Into<String>, ok: bool, witness: impl FnOnce() -> String) {
        if ok {
            self.pass(name);
        } else {
            self.fail(name, witness());
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    /// Order-stable report assembly: sort checks by name.
    pub fn sorted(mut self) -> Self {
        self.checks.sort_by(|a, b| a.name.cmp(&b.name));
        self
    }

    pub fn merge(&mut self, other: Suite) {
        self.checks.extend(other.checks);
    }
}
