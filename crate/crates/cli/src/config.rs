use std::path::Path;

use harbor_core::eta::{RidgeGridPredictor, SampleOptions};
use harbor_core::ingest::SynthConfig;
use harbor_core::sim::SimConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// The one key-value file every command reads. Each table is optional and
/// falls back to its defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarborConfig {
    /// Root seed; `--seed` overrides it.
    pub seed: u64,
    pub traffic: SynthConfig,
    pub samples: SampleOptions,
    pub lambdas: Vec<f64>,
    pub sim: SimConfig,
}

impl Default for HarborConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            traffic: SynthConfig::default(),
            samples: SampleOptions::default(),
            lambdas: RidgeGridPredictor::default().lambdas,
            sim: SimConfig::default(),
        }
    }
}

pub struct Loaded {
    pub config: HarborConfig,
    /// sha256 of the file bytes, absent when running on defaults.
    pub sha256: Option<String>,
}

pub fn load(path: Option<&Path>, required: bool) -> Result<Loaded, CliError> {
    let Some(path) = path else {
        if required {
            return Err(CliError::Usage("--config <FILE> is required".into()));
        }
        return Ok(Loaded {
            config: HarborConfig::default(),
            sha256: None,
        });
    };
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::runtime(format!("config {} is not UTF-8", path.display())))?;
    let config: HarborConfig =
        toml::from_str(&text).map_err(|e| CliError::runtime(format!("invalid config {}: {e}", path.display())))?;
    Ok(Loaded {
        config,
        sha256: Some(crate::manifest::sha256_hex(&bytes)),
    })
}
