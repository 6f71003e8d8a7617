//! Run configuration: a strict TOML file. Unknown keys are fatal — a
//! misspelled override must never silently revert to a default.

use crate::model::{validate as validate_model, ModelSpec, MAX_POLICIES};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// TOML errors carry line/column context in their display output.
    #[error("parse error in {path}:\n{source}")]
    Parse {
        path: PathBuf,
        source: Box<toml::de::Error>,
    },
    #[error("invalid value for `{key}`: {constraint}")]
    Range { key: &'static str, constraint: String },
    #[error("invalid [model] section:\n{0}")]
    Model(String),
}

/// Per-agent planner overrides.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AgentOverrides {
    /// Social weight: one value for all agents or one per agent.
    pub w: Option<WValue>,
    pub precision: Option<f64>,
    pub horizon: Option<usize>,
    /// Upper bound on policy enumeration for this run.
    pub policy_cap: Option<usize>,
    pub sample_actions: bool,
}

/// `w = 0.5` or `w = [0.0, 0.5]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum WValue {
    Scalar(f64),
    PerAgent(Vec<f64>),
}

impl WValue {
    pub fn values(&self) -> Vec<f64> {
        match self {
            WValue::Scalar(v) => vec![*v],
            WValue::PerAgent(vs) => vs.clone(),
        }
    }
}

/// One validated run configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    pub seed: u64,
    pub max_steps: usize,
    /// Output directory; falls back to `EPERSON_OUT_DIR`, then `.`.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Metric selectors exported to CSV after each run.
    #[serde(default)]
    pub export: Vec<String>,
    #[serde(default)]
    pub agents: AgentOverrides,
    /// Optional embedded model description, checked by `validate`.
    #[serde(default)]
    pub model: Option<ModelSpec>,
}

impl RunConfig {
    /// Range and structural checks beyond what parsing enforces.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(w) = &self.agents.w {
            for &v in &w.values() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(ConfigError::Range {
                        key: "agents.w",
                        constraint: format!("{v} is outside [0, 1]"),
                    });
                }
            }
        }
        if let Some(p) = self.agents.precision {
            if !(p.is_finite() && p > 0.0) {
                return Err(ConfigError::Range {
                    key: "agents.precision",
                    constraint: format!("{p} is not a positive finite number"),
                });
            }
        }
        if self.agents.horizon == Some(0) {
            return Err(ConfigError::Range {
                key: "agents.horizon",
                constraint: "must be at least 1".into(),
            });
        }
        if let Some(cap) = self.agents.policy_cap {
            if cap == 0 || cap > MAX_POLICIES {
                return Err(ConfigError::Range {
                    key: "agents.policy_cap",
                    constraint: format!("must be within [1, {MAX_POLICIES}]"),
                });
            }
        }
        if let Some(model) = &self.model {
            let report = validate_model(model);
            if !report.passed() {
                return Err(ConfigError::Model(report.to_string()));
            }
        }
        Ok(())
    }

    /// The effective output directory.
    pub fn resolve_out_dir(&self) -> PathBuf {
        if let Some(dir) = &self.out_dir {
            return dir.clone();
        }
        if let Ok(dir) = std::env::var("EPERSON_OUT_DIR") {
            if !dir.is_empty() {
                return PathBuf::from(dir);
            }
        }
        PathBuf::from(".")
    }
}

/// Reads, parses, and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config: RunConfig = toml::from_str(&text).map_err(|source| ConfigError::Parse {
        path: path.to_path_buf(),
        source: Box::new(source),
    })?;
    config.validate()?;
    Ok(config)
}
