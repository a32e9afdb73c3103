//! Run configuration file: JSON with a `format_version`, every field
//! optional. Command-line flags override file values.

use std::path::{Path, PathBuf};

use mltqnn_core::model::ModelConfig;
use serde::{Deserialize, Serialize};

use crate::dataio::DatasetManifest;

pub const FORMAT_VERSION: u32 = 1;
pub const EFFECTIVE_CONFIG_FILE: &str = "config.json";

/// The model hyper-parameters as stored in config echoes and checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub image_size: usize,
    pub patch: usize,
    pub features: usize,
    pub blocks: usize,
    pub kernels: usize,
    pub channels: usize,
    pub num_classes: usize,
    pub alpha: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub runs: usize,
    pub seed: u64,
    pub reconstruction: bool,
    pub lwm: bool,
}

impl From<&ModelConfig> for ModelSection {
    fn from(c: &ModelConfig) -> Self {
        ModelSection {
            image_size: c.image_size,
            patch: c.patch,
            features: c.features,
            blocks: c.blocks,
            kernels: c.kernels,
            channels: c.channels,
            num_classes: c.num_classes,
            alpha: c.alpha,
            learning_rate: c.learning_rate,
            batch_size: c.batch_size,
            epochs: c.epochs,
            runs: c.runs,
            seed: c.seed,
            reconstruction: c.reconstruction,
            lwm: c.lwm,
        }
    }
}

impl From<&ModelSection> for ModelConfig {
    fn from(s: &ModelSection) -> Self {
        ModelConfig {
            image_size: s.image_size,
            patch: s.patch,
            features: s.features,
            blocks: s.blocks,
            kernels: s.kernels,
            channels: s.channels,
            num_classes: s.num_classes,
            alpha: s.alpha,
            learning_rate: s.learning_rate,
            batch_size: s.batch_size,
            epochs: s.epochs,
            runs: s.runs,
            seed: s.seed,
            reconstruction: s.reconstruction,
            lwm: s.lwm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub deterministic: bool,
    pub train_fraction: Option<f64>,
    /// `CLASS:FRACTION`.
    pub minority: Option<String>,
    /// Zero-pad loaded images to this side length.
    pub pad_to: Option<usize>,
    pub patch: usize,
    pub features: usize,
    pub blocks: usize,
    pub kernels: usize,
    pub alpha: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub runs: usize,
    pub seed: u64,
    pub reconstruction: bool,
    pub lwm: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = ModelConfig::canonical(1, 2);
        RunConfig {
            format_version: FORMAT_VERSION,
            data: None,
            out: None,
            deterministic: false,
            train_fraction: None,
            minority: None,
            pad_to: None,
            patch: m.patch,
            features: m.features,
            blocks: m.blocks,
            kernels: m.kernels,
            alpha: m.alpha,
            learning_rate: m.learning_rate,
            batch_size: m.batch_size,
            epochs: m.epochs,
            runs: m.runs,
            seed: m.seed,
            reconstruction: m.reconstruction,
            lwm: m.lwm,
        }
    }
}

impl RunConfig {
    pub fn read(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if cfg.format_version != FORMAT_VERSION {
            return Err(format!("{}: unsupported format_version {}", path.display(), cfg.format_version));
        }
        Ok(cfg)
    }

    /// Model configuration for a dataset; image size, channels and class
    /// count come from the data.
    pub fn model_config(&self, manifest: &DatasetManifest) -> ModelConfig {
        ModelConfig {
            image_size: self.pad_to.unwrap_or(manifest.image_size()),
            patch: self.patch,
            features: self.features,
            blocks: self.blocks,
            kernels: self.kernels,
            channels: manifest.channels(),
            num_classes: manifest.num_classes,
            alpha: self.alpha,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            runs: self.runs,
            seed: self.seed,
            reconstruction: self.reconstruction,
            lwm: self.lwm,
        }
    }
}

/// What `train` writes to `<out>/config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveConfig {
    pub format_version: u32,
    pub run: RunConfig,
    pub model: ModelSection,
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}
