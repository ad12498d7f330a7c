//! JSON experiment config. Every section is optional and partially
//! specifiable; missing fields fall back to library defaults and
//! command-line flags override whatever the file says.

use std::path::Path;

use anyhow::Context;
use readorder_core::synthgen::GenSpec;
use readorder_model::{ModelConfig, TrainConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeSection {
    pub beam: usize,
    pub constrained: bool,
    pub shuffle_rate: f64,
}

impl Default for DecodeSection {
    fn default() -> Self {
        Self {
            beam: 1,
            constrained: true,
            shuffle_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub gen: GenSpec,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub decode: DecodeSection,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_sections_keep_defaults() {
        let c: FileConfig = serde_json::from_str(r#"{"model": {"hidden_dim": 64}, "train": {"epochs": 3}}"#).unwrap();
        assert_eq!(c.model.hidden_dim, 64);
        assert_eq!(c.model.layers, ModelConfig::default().layers);
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.gen, GenSpec::default());
        assert!(serde_json::from_str::<FileConfig>(r#"{"modle": {}}"#).is_err());
    }
}
