//! Confusion counts and the four headline detection metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Binary counts with `positive` against every other class.
pub fn confusion(pred: &[u32], truth: &[u32], positive: u32) -> Result<ConfusionCounts> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            expected: truth.len(),
            found: pred.len(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.iter().zip(truth) {
        match (p == positive, t == positive) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub fpr: f64,
    /// Set when `tp + fn == 0`; sensitivity is then reported as 1.
    #[serde(default)]
    pub sensitivity_undefined: bool,
    /// Set when `tn + fp == 0`; specificity is then 1 and FPR 0.
    #[serde(default)]
    pub specificity_undefined: bool,
}

pub fn metrics(c: &ConfusionCounts) -> Metrics {
    let ratio = |num: u64, den: u64| num as f64 / den as f64;
    let total = c.total();
    let accuracy = if total > 0 { ratio(c.tp + c.tn, total) } else { 0.0 };
    let sensitivity_undefined = c.tp + c.fn_ == 0;
    let specificity_undefined = c.tn + c.fp == 0;
    let sensitivity = if sensitivity_undefined { 1.0 } else { ratio(c.tp, c.tp + c.fn_) };
    let (specificity, fpr) = if specificity_undefined {
        (1.0, 0.0)
    } else {
        (ratio(c.tn, c.tn + c.fp), ratio(c.fp, c.tn + c.fp))
    };
    Metrics {
        accuracy,
        sensitivity,
        specificity,
        fpr,
        sensitivity_undefined,
        specificity_undefined,
    }
}

/// Fraction of exact label matches.
pub fn accuracy(pred: &[u32], truth: &[u32]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            expected: truth.len(),
            found: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty prediction".into()));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}
