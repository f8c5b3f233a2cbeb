//! Uniform output of every inequality checker.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Saturated,
    Violated,
}

impl Verdict {
    /// `violated` iff `deficit < −tol` (or undefined), `saturated` iff `|deficit| ≤ tol`.
    pub fn classify(deficit: f64, tol: f64) -> Self {
        if deficit.is_nan() || deficit < -tol {
            Verdict::Violated
        } else if deficit.abs() <= tol {
            Verdict::Saturated
        } else {
            Verdict::Holds
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub deficit: f64,
    pub tol: f64,
    pub verdict: Verdict,
    pub meta: BTreeMap<String, Value>,
}

impl InequalityReport {
    /// Report for `lhs ≤ rhs` with `deficit = rhs − lhs`.
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self::with_deficit(name, lhs, rhs, rhs - lhs, tol)
    }

    pub fn with_deficit(name: impl Into<String>, lhs: f64, rhs: f64, deficit: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            deficit,
            tol,
            verdict: Verdict::classify(deficit, tol),
            meta: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub fn insert_meta(&mut self, key: &str, value: impl Into<Value>) {
        self.meta.insert(key.to_string(), value.into());
    }

    pub fn is_violated(&self) -> bool {
        self.verdict == Verdict::Violated
    }
}
