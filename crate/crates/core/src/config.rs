//! Experiment configuration documents and `key=value` overrides.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chain::ChainSpec;
use crate::control::ControlSetup;
use crate::dynamics::Integration;
use crate::robustness::ParameterSelector;

/// Environment variable naming the default output root.
pub const OUTPUT_ENV: &str = "LYAPCHAIN_OUTPUT";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("bad override '{0}': expected key.path=value")]
    Override(String),
    #[error("override path '{0}' runs through a non-object value")]
    OverridePath(String),
    #[error("config describes a '{found}' experiment but the '{expected}' command was requested")]
    WrongExperiment { expected: &'static str, found: &'static str },
}

/// Explicit list or evenly spaced points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Linspace { start: f64, stop: f64, steps: usize },
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match *self {
            Grid::List(ref v) => v.clone(),
            Grid::Linspace { start, stop, steps } => match steps {
                0 => Vec::new(),
                1 => vec![start],
                _ => (0..steps).map(|i| start + (stop - start) * i as f64 / (steps - 1) as f64).collect(),
            },
        }
    }
}

fn one() -> usize {
    1
}

fn default_t_trunc() -> f64 {
    1000.0
}

fn default_epsilon() -> [f64; 2] {
    [-0.05, 0.05]
}

fn default_sample_dt() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticDraws {
    pub draws: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon_range: [f64; 2],
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Transfer {
        #[serde(default = "one")]
        initial_site: usize,
    },
    FreeEvolution {
        t_max: f64,
        #[serde(default = "default_sample_dt")]
        sample_dt: f64,
        #[serde(default = "one")]
        from_site: usize,
        /// Defaults to the last site.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        to_site: Option<usize>,
    },
    OccupationScan {
        d1: Grid,
        d2: Grid,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        site: Option<usize>,
    },
    DisorderSweep {
        selector: ParameterSelector,
        deltas: Grid,
        #[serde(default = "default_t_trunc")]
        t_trunc: f64,
    },
    DynamicDisorder {
        n: usize,
        #[serde(default = "default_epsilon")]
        epsilon_range: [f64; 2],
        runs: usize,
        #[serde(default)]
        base_seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resample_stride: Option<usize>,
    },
    Spectrum {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        static_draws: Option<StaticDraws>,
    },
    Scalability {
        m_list: Vec<usize>,
        fidelity_target: f64,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Transfer { .. } => "transfer",
            Experiment::FreeEvolution { .. } => "free_evolution",
            Experiment::OccupationScan { .. } => "occupation_scan",
            Experiment::DisorderSweep { .. } => "disorder_sweep",
            Experiment::DynamicDisorder { .. } => "dynamic_disorder",
            Experiment::Spectrum { .. } => "spectrum",
            Experiment::Scalability { .. } => "scalability",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { directory: None, formats: default_formats() }
    }
}

impl OutputSpec {
    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub chain: ChainSpec,
    #[serde(default)]
    pub control: ControlSetup,
    #[serde(default)]
    pub integration: Integration,
    pub experiment: Experiment,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = serde_json::from_value(value).map_err(|e| ConfigError::Schema(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path` and applies each `key.path=value` override in order.
    pub fn load(path: &std::path::Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut value: Value = serde_json::from_str(&text).map_err(|e| ConfigError::Json(e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        Self::from_value(value)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let schema = |e: crate::Error| ConfigError::Schema(e.to_string());
        self.control.validate().map_err(schema)?;
        self.integration.validate().map_err(schema)?;
        if let Some(p) = &self.control.p_weights {
            if p.len() != self.chain.m() {
                return Err(ConfigError::Schema(format!("control.p_weights has {} entries, chain has {} sites", p.len(), self.chain.m())));
            }
        }
        if let Experiment::DynamicDisorder { runs: 0, .. } = self.experiment {
            return Err(ConfigError::Schema("experiment.runs must be at least 1".into()));
        }
        if let Experiment::Scalability { ref m_list, fidelity_target } = self.experiment {
            if m_list.is_empty() {
                return Err(ConfigError::Schema("experiment.m_list must not be empty".into()));
            }
            if !(fidelity_target > 0.5 && fidelity_target < 1.0) {
                return Err(ConfigError::Schema(format!("experiment.fidelity_target {fidelity_target} outside (0.5, 1)")));
            }
        }
        Ok(())
    }

    /// The fully resolved config, defaults filled in.
    pub fn canonical(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// SHA-256 of the canonical form, hex encoded. Omitting a field and
    /// spelling out its default hash the same.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.canonical()).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

/// Parses `a.b.c=value`. The value is taken as JSON when it parses, as a
/// plain string otherwise.
pub fn parse_override(text: &str) -> Result<(Vec<String>, Value), ConfigError> {
    let (key, raw) = text.split_once('=').ok_or_else(|| ConfigError::Override(text.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::Override(text.to_string()));
    }
    let path: Vec<String> = key.split('.').map(|s| s.trim().to_string()).collect();
    if path.iter().any(String::is_empty) {
        return Err(ConfigError::Override(text.to_string()));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((path, value))
}

/// Sets the value at a dotted path, creating intermediate objects. Numeric
/// segments index into existing arrays.
pub fn apply_override(doc: &mut Value, text: &str) -> Result<(), ConfigError> {
    let (path, value) = parse_override(text)?;
    let mut node = doc;
    for (i, seg) in path.iter().enumerate() {
        let last = i + 1 == path.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(seg.clone(), value);
                    return Ok(());
                }
                map.entry(seg.clone()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = seg.parse().map_err(|_| ConfigError::OverridePath(text.to_string()))?;
                let slot = items.get_mut(idx).ok_or_else(|| ConfigError::OverridePath(text.to_string()))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(ConfigError::OverridePath(text.to_string())),
        };
    }
    unreachable!("path has at least one segment")
}
