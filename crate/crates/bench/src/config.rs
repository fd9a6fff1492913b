//! Flat TOML experiment files.
//!
//! Every key is optional. A file may start from a built-in preset
//! (`preset = "fig2-panel-b"`) and override single keys; `key=value`
//! overrides from the command line are applied last. Example:
//!
//! ```toml
//! scenario = "my-run"
//! source = "libsvm"          # spiked | libsvm | docword | bundled
//! path = "data/train.libsvm"
//! k = 5
//! block_size = 100
//! algorithms = ["history", "oja"]
//! m = [3]
//! c = [0.1, 1, 10]
//! seeds = 3
//! metric = "explained_variance"
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use historypca::metrics::MetricName;
use historypca::solvers::Algorithm;

use crate::error::{BenchError, Result};
use crate::presets::find_preset;
use crate::spec::{DataSource, ExperimentSpec};

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub scenario: Option<String>,
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Bundled dataset name for `source = "bundled"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    /// LIBSVM dimension override.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub k: Option<usize>,
    pub block_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub passes: Option<usize>,
    pub algorithms: Option<Vec<String>>,
    pub m: Option<Vec<usize>>,
    pub c: Option<Vec<f64>>,
    pub track_lambda: Option<bool>,
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub seeds: Option<usize>,
    pub seed_base: Option<u64>,
    pub eval_every: Option<usize>,
    pub eval_samples: Option<usize>,
    pub metric: Option<String>,
    pub top_c: Option<usize>,
}

fn cfg_err(msg: impl Into<String>) -> BenchError {
    BenchError::Config(msg.into())
}

/// Parses one `key=value` override. Values that are not valid TOML are
/// taken as bare strings, so `source=libsvm` works unquoted.
fn parse_override(text: &str) -> Result<(String, toml::Value)> {
    let (key, value) = text
        .split_once('=')
        .ok_or_else(|| cfg_err(format!("override {text:?} is not key=value")))?;
    let key = key.trim().to_string();
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key, parsed))
}

/// Reads a config text plus overrides into a validated spec.
pub fn load_spec(text: &str, overrides: &[String]) -> Result<ExperimentSpec> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| cfg_err(e.message().to_string()))?;
    for o in overrides {
        let (k, v) = parse_override(o)?;
        table.insert(k, v);
    }
    let file: ConfigFile = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| cfg_err(e.message().to_string()))?;
    let spec = file.apply()?;
    spec.validate()?;
    Ok(spec)
}

impl ConfigFile {
    pub fn apply(self) -> Result<ExperimentSpec> {
        let mut spec = match &self.preset {
            Some(name) => find_preset(name).ok_or_else(|| cfg_err(format!("unknown preset {name:?}")))?,
            None => ExperimentSpec::spiked("custom", 100, 1, 0.5, 10),
        };
        if let Some(s) = self.scenario {
            spec.scenario = s;
        }
        let kind = self.source.as_deref().unwrap_or(spec.source.kind());
        spec.source = match kind {
            "spiked" => {
                let (d0, s0) = match spec.source {
                    DataSource::Spiked { d, sigma } => (Some(d), Some(sigma)),
                    _ => (None, None),
                };
                DataSource::Spiked {
                    d: self.d.or(d0).ok_or_else(|| cfg_err("spiked source needs d"))?,
                    sigma: self.sigma.or(s0).ok_or_else(|| cfg_err("spiked source needs sigma"))?,
                }
            }
            "libsvm" | "docword" => {
                let prev = match &spec.source {
                    DataSource::Libsvm { path, .. } | DataSource::Docword { path } => Some(path.clone()),
                    _ => None,
                };
                let path = self.path.or(prev).ok_or_else(|| cfg_err(format!("{kind} source needs path")))?;
                if kind == "libsvm" {
                    let prev_dim = match spec.source {
                        DataSource::Libsvm { dim, .. } => dim,
                        _ => None,
                    };
                    DataSource::Libsvm {
                        path,
                        dim: self.dim.or(prev_dim),
                    }
                } else {
                    DataSource::Docword { path }
                }
            }
            "bundled" => {
                let prev = match &spec.source {
                    DataSource::Bundled { name } => Some(name.clone()),
                    _ => None,
                };
                DataSource::Bundled {
                    name: self
                        .dataset
                        .or(prev)
                        .ok_or_else(|| cfg_err("bundled source needs dataset"))?,
                }
            }
            other => return Err(cfg_err(format!("unknown source {other:?}"))),
        };
        if !spec.source.is_synthetic() && self.source.is_some() && self.n.is_none() {
            spec.n_samples = None;
        }
        macro_rules! set {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if let Some(v) = self.$field { spec.$target = v; })*
            };
        }
        set!(k => k, block_size => block_size, passes => passes, m => m_grid, c => c_grid,
             track_lambda => track_lambda, tol => tol, seeds => seeds, seed_base => seed_base,
             eval_every => eval_every, eval_samples => eval_samples, top_c => top_c);
        if let Some(n) = self.n {
            spec.n_samples = Some(n);
        }
        if let Some(eta) = self.eta {
            spec.eta = Some(eta);
        }
        if let Some(names) = self.algorithms {
            spec.algorithms = names
                .iter()
                .map(|n| n.parse::<Algorithm>())
                .collect::<historypca::Result<_>>()
                .map_err(|e| cfg_err(e.to_string()))?;
        }
        if let Some(m) = self.metric {
            spec.metric = MetricName::parse(&m).ok_or_else(|| cfg_err(format!("unknown metric {m:?}")))?;
        }
        Ok(spec)
    }

    /// Fully populated file describing `spec`.
    pub fn from_spec(spec: &ExperimentSpec) -> Self {
        let mut f = ConfigFile {
            scenario: Some(spec.scenario.clone()),
            source: Some(spec.source.kind().to_string()),
            k: Some(spec.k),
            block_size: Some(spec.block_size),
            n: spec.n_samples,
            passes: Some(spec.passes),
            algorithms: Some(spec.algorithms.iter().map(|a| a.to_string()).collect()),
            m: Some(spec.m_grid.clone()),
            c: Some(spec.c_grid.clone()),
            track_lambda: Some(spec.track_lambda),
            tol: Some(spec.tol),
            eta: spec.eta,
            seeds: Some(spec.seeds),
            seed_base: Some(spec.seed_base),
            eval_every: Some(spec.eval_every),
            eval_samples: Some(spec.eval_samples),
            metric: Some(spec.metric.as_str().to_string()),
            top_c: Some(spec.top_c),
            ..Default::default()
        };
        match &spec.source {
            DataSource::Spiked { d, sigma } => {
                f.d = Some(*d);
                f.sigma = Some(*sigma);
            }
            DataSource::Libsvm { path, dim } => {
                f.path = Some(path.clone());
                f.dim = *dim;
            }
            DataSource::Docword { path } => f.path = Some(path.clone()),
            DataSource::Bundled { name } => f.dataset = Some(name.clone()),
        }
        f
    }
}

pub fn to_toml(spec: &ExperimentSpec) -> Result<String> {
    toml::to_string(&ConfigFile::from_spec(spec)).map_err(|e| cfg_err(e.to_string()))
}
