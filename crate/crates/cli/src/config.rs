use std::path::{Path, PathBuf};

use rough_pdo::NormMethod;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// One experiment run, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Symbol families to include, where an experiment offers a choice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Sweep over `delta = 2^-k` for the listed `k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_exponents: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_max: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_seed: Option<u64>,
    /// Number of random samples (symbols, functions, pairs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Angular resolution of sphere symbols.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere_m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_method: Option<NormMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: &str, seed: u64) -> Self {
        ExperimentConfig {
            experiment: experiment.to_string(),
            seed,
            n: None,
            dim: None,
            family: None,
            delta: None,
            delta_exponents: None,
            m: None,
            l: None,
            k0: None,
            j_max: None,
            u_seed: None,
            count: None,
            sphere_m: None,
            norm_method: None,
            out_dir: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }
}
