//! The complete description of one run, as stored in metadata.json.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use randmean::grid::GridSpec;
use randmean::measure::{BaseMeasure, MeanFunction};
use randmean::mixture::Kernel;
use randmean::models::SampleSummary;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    #[default]
    PriorCdf,
    PriorDensity,
    PosteriorDensity,
    PosteriorCdf,
    MixtureDensity,
    MixtureCdf,
    PdCdf,
    PdFdd,
    Predictive,
    Simulate,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::PriorCdf => "prior-cdf",
            Command::PriorDensity => "prior-density",
            Command::PosteriorDensity => "posterior-density",
            Command::PosteriorCdf => "posterior-cdf",
            Command::MixtureDensity => "mixture-density",
            Command::MixtureCdf => "mixture-cdf",
            Command::PdCdf => "pd-cdf",
            Command::PdFdd => "pd-fdd",
            Command::Predictive => "predictive",
            Command::Simulate => "simulate",
            Command::Validate => "validate",
        }
    }

    pub fn is_density(self) -> bool {
        matches!(self, Command::PriorDensity | Command::PosteriorDensity | Command::MixtureDensity)
    }
}

/// Every input that influences the results. Output location and thread count are not part of it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<MeanFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Kernel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<BaseMeasure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
}

impl RunConfig {
    /// Reads a config file, or the `config` member of a metadata file.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut value: Value = serde_json::from_str(&text).map_err(|e| Failure::config(format!("malformed config JSON: {e}")))?;
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
        serde_json::from_value(value).map_err(|e| Failure::config(format!("invalid config: {e}")))
    }

    pub fn set_tolerances(&mut self, abs_tol: Option<f64>, rel_tol: Option<f64>) {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
    }
}

/// `{"distinct": [[x, n], ...]}` or `{"observations": [x, ...]}`.
pub fn parse_sample(value: Value) -> Result<SampleSummary, Failure> {
    let bad = |e: String| Failure::config(format!("invalid sample: {e}"));
    if let Some(obs) = value.get("observations") {
        let xs: Vec<f64> = serde_json::from_value(obs.clone()).map_err(|e| bad(e.to_string()))?;
        return SampleSummary::from_observations(&xs).map_err(|e| bad(e.to_string()));
    }
    serde_json::from_value(value).map_err(|e| bad(e.to_string()))
}

/// `{"y": [...]}` or a bare array.
pub fn parse_data(value: Value) -> Result<Vec<f64>, Failure> {
    let inner = match value.get("y") {
        Some(y) => y.clone(),
        None => value,
    };
    serde_json::from_value(inner).map_err(|e| Failure::config(format!("invalid mixture data: {e}")))
}
