//! Declarative configuration and run manifests.
//!
//! A config is one TOML (or JSON, by extension) document with flat sections:
//!
//! ```toml
//! realizations = 20      # sweep only
//!
//! [generator]            # used by `generate`
//! num_users = 1000
//! num_objects = 1000
//! sparsity = 0.1
//!
//! [population]           # used by `sweep`
//! num_users = 200
//! num_objects = 200
//! sparsity = 0.1
//! seed = 1
//!
//! [sweep]
//! kind = "sigma_max"
//! r_max = 5
//! ```
//!
//! Every command writes a `manifest.json` holding the fully resolved config.
//! Passing that manifest back as `--config` reproduces the outputs.

use std::path::{Path, PathBuf};

use coderank::experiments::ExperimentSpec;
use coderank::{AlgorithmConfig, GeneratorConfig, PopulationConfig, Sweep};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Realizations per grid point when a sweep config does not say.
pub const DEFAULT_REALIZATIONS: usize = 100;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("{path}: missing section `{section}`")]
    MissingSection { path: String, section: &'static str },

    #[error("{path}: invalid `{field}`: {reason}")]
    Invalid {
        path: String,
        field: &'static str,
        reason: String,
    },
}

fn invalid_from(path: &str, e: coderank::Error) -> ConfigError {
    match e {
        coderank::Error::InvalidConfig { field, reason } => ConfigError::Invalid {
            path: path.to_string(),
            field,
            reason,
        },
        other => ConfigError::Parse {
            path: path.to_string(),
            message: other.to_string(),
        },
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<PopulationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithms: Option<Vec<AlgorithmConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevant_fraction: Option<f64>,
}

impl ConfigFile {
    pub fn from_toml(text: &str, path: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_string(),
            message: e.to_string(),
        })
    }

    /// Accepts either a bare config or a manifest written by a previous run.
    pub fn from_json(text: &str, path: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_string(),
            message: e.to_string(),
        })?;
        let result = if value.get("subcommand").is_some() {
            serde_json::from_value::<RunManifest>(value).map(|m| m.config)
        } else {
            serde_json::from_value::<ConfigFile>(value)
        };
        result.map_err(|e| ConfigError::Parse {
            path: path.to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: name.clone(),
            source,
        })?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text, &name),
            _ => Self::from_toml(&text, &name),
        }
    }

    /// The generator section with overrides applied, validated.
    pub fn generator(&self, path: &str, overrides: &Overrides) -> Result<GeneratorConfig, ConfigError> {
        let mut config = self.generator.clone().ok_or_else(|| ConfigError::MissingSection {
            path: path.to_string(),
            section: "generator",
        })?;
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(mode) = overrides.mode {
            config.mode = mode;
        }
        config.validate().map_err(|e| invalid_from(path, e))?;
        Ok(config)
    }

    /// The sweep sections assembled into an experiment spec with overrides applied, validated.
    pub fn experiment(&self, path: &str, overrides: &Overrides) -> Result<ExperimentSpec, ConfigError> {
        let missing = |section| ConfigError::MissingSection {
            path: path.to_string(),
            section,
        };
        let mut population = self.population.clone().ok_or_else(|| missing("population"))?;
        if let Some(seed) = overrides.seed {
            population.seed = seed;
        }
        let spec = ExperimentSpec {
            population,
            sweep: self.sweep.clone().ok_or_else(|| missing("sweep"))?,
            algorithms: self.algorithms.clone().unwrap_or_else(AlgorithmConfig::all),
            realizations: overrides
                .realizations
                .or(self.realizations)
                .unwrap_or(DEFAULT_REALIZATIONS),
            relevant_fraction: self
                .relevant_fraction
                .unwrap_or(coderank::metrics::DEFAULT_RELEVANT_FRACTION),
        };
        spec.validate().map_err(|e| invalid_from(path, e))?;
        Ok(spec)
    }

    pub fn from_generator(config: GeneratorConfig) -> Self {
        Self {
            generator: Some(config),
            ..Self::default()
        }
    }

    pub fn from_experiment(spec: ExperimentSpec) -> Self {
        Self {
            population: Some(spec.population),
            sweep: Some(spec.sweep),
            algorithms: Some(spec.algorithms),
            realizations: Some(spec.realizations),
            relevant_fraction: Some(spec.relevant_fraction),
            ..Self::default()
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<coderank::RatingMode>,
}

/// Record of one invocation. `config` is fully resolved, so the manifest
/// alone reproduces the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_path: Option<PathBuf>,
    pub out: PathBuf,
    #[serde(default)]
    pub overrides: Overrides,
    pub config: ConfigFile,
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        config_path: Option<&Path>,
        out: &Path,
        overrides: Overrides,
        config: ConfigFile,
    ) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_path: config_path.map(Path::to_path_buf),
            out: out.to_path_buf(),
            overrides,
            config,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }
}
