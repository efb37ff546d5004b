//! Repeated evaluation with a normal-approximation confidence interval.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::ExtractorInfo;
use crate::error::Result;

pub const DEFAULT_REPETITIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Half-width `1.96 · sd / √n` with the sample standard deviation.
    pub ci95: f64,
    pub n_reps: usize,
}

impl Summary {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                ci95: f64::NAN,
                n_reps: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let ci95 = if n < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            1.96 * var.sqrt() / (n as f64).sqrt()
        };
        Self { mean, ci95, n_reps: n }
    }
}

/// Runs `f(rep)` for `reps` repetitions and summarizes the results.
pub fn repeat(reps: usize, mut f: impl FnMut(usize) -> Result<f64>) -> Result<Summary> {
    let values = (0..reps).map(&mut f).collect::<Result<Vec<_>>>()?;
    Ok(Summary::from_values(&values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEntry {
    pub mean: f64,
    pub ci95: f64,
    pub n_reps: usize,
    pub extractor: ExtractorInfo,
}

/// Metric name to summarized value, serialized as a JSON object.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricsReport {
    pub metrics: BTreeMap<String, MetricEntry>,
}

impl MetricsReport {
    pub fn insert(&mut self, name: &str, summary: Summary, extractor: &ExtractorInfo) {
        self.metrics.insert(
            name.to_string(),
            MetricEntry {
                mean: summary.mean,
                ci95: summary.ci95,
                n_reps: summary.n_reps,
                extractor: extractor.clone(),
            },
        );
    }

    pub fn get(&self, name: &str) -> Option<&MetricEntry> {
        self.metrics.get(name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::io_util::write_atomic(path, self.to_json()?.as_bytes())
    }
}
