use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::data::{Dataset, DeletionRule};
use crate::dre::EstimatorKind;
use crate::stats::PhiFamily;
use crate::{Error, Result};

/// An estimator as written in a config file. `exact` without a bandwidth
/// uses the learner's `sigma_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EstimatorEntry {
    Exact {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
    Kbc {
        sigma_c: f64,
    },
    Knn {
        k: usize,
    },
}

impl EstimatorEntry {
    pub fn resolve(&self, sigma_a: f64) -> EstimatorKind {
        match *self {
            EstimatorEntry::Exact { sigma } => EstimatorKind::Exact {
                sigma: sigma.unwrap_or(sigma_a),
            },
            EstimatorEntry::Kbc { sigma_c } => EstimatorKind::Kbc { sigma_c },
            EstimatorEntry::Knn { k } => EstimatorKind::Knn { k },
        }
    }
}

/// How kNN counts neighbours. Only the duplicated-multiset reading (kept
/// points occupy two of the k slots) is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnVotes {
    #[default]
    Multiset,
}

/// KBC bandwidths 0.05, 0.0625, ..., 0.2.
pub fn default_kbc_grid() -> Vec<f64> {
    (0..=12).map(|i| 0.05 + 0.0125 * i as f64).collect()
}

pub const DEFAULT_KNN_GRID: [usize; 7] = [1, 2, 5, 10, 20, 50, 100];

fn default_estimator_grid() -> Vec<EstimatorEntry> {
    default_kbc_grid()
        .into_iter()
        .map(|sigma_c| EstimatorEntry::Kbc { sigma_c })
        .chain(DEFAULT_KNN_GRID.iter().map(|&k| EstimatorEntry::Knn { k }))
        .collect()
}

fn default_dataset() -> Dataset {
    Dataset::Mog8
}
fn default_lambda() -> f64 {
    0.8
}
fn default_n() -> usize {
    400
}
fn default_m() -> usize {
    400
}
fn default_repeats() -> usize {
    250
}
fn default_sigma_a() -> f64 {
    0.1
}
fn default_phi() -> Vec<PhiFamily> {
    vec![PhiFamily::Kl]
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_mmd_bandwidth() -> f64 {
    1.0
}
fn default_n_cal() -> usize {
    99
}
fn default_alpha() -> f64 {
    0.05
}
fn default_test_trials() -> usize {
    100
}

/// Flat experiment configuration. Every field has a default; unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_dataset")]
    pub dataset: Dataset,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Training set size `N`.
    #[serde(rename = "N", default = "default_n")]
    pub n: usize,
    /// Size of every sample set drawn per repeat.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Number of repeats `R`.
    #[serde(rename = "R", default = "default_repeats")]
    pub repeats: usize,
    /// KDE learner bandwidth.
    #[serde(default = "default_sigma_a")]
    pub sigma_a: f64,
    #[serde(default = "default_estimator_grid")]
    pub estimator_grid: Vec<EstimatorEntry>,
    #[serde(default = "default_phi")]
    pub phi_families: Vec<PhiFamily>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub deletion_rule: DeletionRule,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// 1-based cluster ids scaled by λ; `null` uses the dataset default.
    #[serde(default)]
    pub reweighted_clusters: Option<BTreeSet<u32>>,
    /// Redraw `X` (and refit every model) in each repeat instead of once.
    #[serde(default)]
    pub redraw_x: bool,
    #[serde(default)]
    pub knn_votes: KnnVotes,
    #[serde(default = "default_mmd_bandwidth")]
    pub mmd_bandwidth: f64,
    /// Null draws used to calibrate the deletion test threshold.
    #[serde(default = "default_n_cal")]
    pub n_cal: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Trials per hypothesis for the `test` command.
    #[serde(default = "default_test_trials")]
    pub test_trials: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_value(Value::Object(Map::new())).expect("defaults deserialize")
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n == 0 {
            return fail("N must be positive".into());
        }
        if self.m == 0 {
            return fail("m must be positive".into());
        }
        if self.repeats < 2 {
            return fail(format!("R must be at least 2, got {}", self.repeats));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return fail(format!("lambda must lie in (0, 1], got {}", self.lambda));
        }
        if !(self.sigma_a > 0.0 && self.sigma_a.is_finite()) {
            return fail(format!("sigma_a must be positive, got {}", self.sigma_a));
        }
        if !(self.mmd_bandwidth > 0.0 && self.mmd_bandwidth.is_finite()) {
            return fail(format!(
                "mmd_bandwidth must be positive, got {}",
                self.mmd_bandwidth
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        for e in &self.estimator_grid {
            e.resolve(self.sigma_a)
                .validate()
                .map_err(|err| Error::Config(err.to_string()))?;
        }
        if let Some(ids) = &self.reweighted_clusters {
            if let Some(bad) = ids.iter().find(|&&i| !(1..=8).contains(&i)) {
                return fail(format!("reweighted cluster id {bad} outside 1..=8"));
            }
        }
        Ok(())
    }

    pub fn reweighted(&self) -> BTreeSet<u32> {
        self.reweighted_clusters
            .clone()
            .unwrap_or_else(|| self.dataset.default_reweighted())
    }

    pub fn estimators(&self) -> Vec<EstimatorKind> {
        self.estimator_grid
            .iter()
            .map(|e| e.resolve(self.sigma_a))
            .collect()
    }

    /// Parses a JSON config, applying `key=value` overrides first. Values
    /// are read as JSON when they parse, otherwise as strings.
    pub fn from_json_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| Error::Config("config must be a JSON object".into()))?;
        for o in overrides {
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            let parsed =
                serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            obj.insert(key.trim().to_string(), parsed);
        }
        let config: Self =
            serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|source| Error::ReadFile {
                path: p.to_path_buf(),
                source,
            })?,
            None => "{}".to_string(),
        };
        Self::from_json_str(&text, overrides)
    }
}
