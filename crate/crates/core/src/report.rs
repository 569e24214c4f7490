//! Counting results shared by the experiments.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::exactlin::Scalar;

/// Outcome of a counting experiment.
#[derive(Clone, Debug, Serialize)]
pub struct CountReport {
    pub count: u64,
    pub volume: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volume_exact: Option<Scalar>,
    pub predicted: f64,
    /// `count / predicted`, or 0 when nothing is predicted.
    pub ratio: f64,
    pub params: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, Value>,
}

impl CountReport {
    pub fn new(count: u64, volume: f64, predicted: f64, params: Value) -> Self {
        let ratio = if predicted > 0.0 { count as f64 / predicted } else { 0.0 };
        Self { count, volume, volume_exact: None, predicted, ratio, params, elapsed_ms: None, seed: None, extra: BTreeMap::new() }
    }

    pub fn with_extra(mut self, key: &str, value: impl Serialize) -> Self {
        self.extra.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }
}
