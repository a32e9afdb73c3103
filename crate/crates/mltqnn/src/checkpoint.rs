//! Checkpoints: a JSON manifest naming the segments, the Adam state and the
//! model configuration, next to a raw little-endian `f64` file holding the
//! parameters, first moments and second moments in that order, each as the
//! concatenation of the segments in manifest order.

use std::fs;
use std::path::{Path, PathBuf};

use mltqnn_core::model::{ModelConfig, ParamSet, ParameterStore, BETA1, BETA2, EPSILON};
use serde::{Deserialize, Serialize};

use crate::config::{to_pretty_json, ModelSection};

pub const FORMAT_VERSION: u32 = 1;
pub const ARRAYS: [&str; 3] = ["params", "first_moment", "second_moment"];

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: malformed checkpoint manifest: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {reason}", path.display())]
    Invalid { path: PathBuf, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub name: String,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamState {
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub data_file: String,
    pub dtype: String,
    pub byte_order: String,
    pub arrays: Vec<String>,
    pub segments: Vec<Segment>,
    pub adam: AdamState,
    pub model: ModelSection,
    pub run: usize,
    pub seed: u64,
    pub best_epoch: usize,
    /// Absent when no epoch completed.
    pub best_val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelConfig,
    pub store: ParameterStore,
    pub run: usize,
    pub seed: u64,
    pub best_epoch: usize,
    pub best_val_loss: Option<f64>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io { path: path.to_path_buf(), source }
}

fn segments_of(p: &ParamSet) -> Vec<Segment> {
    ParamSet::SEGMENT_NAMES
        .iter()
        .zip(p.segments())
        .map(|(name, s)| Segment { name: name.to_string(), len: s.len() })
        .collect()
}

impl Checkpoint {
    /// Writes `<stem>.json` and `<stem>.bin`; returns the manifest path.
    pub fn save(&self, stem: &Path) -> Result<PathBuf, CheckpointError> {
        let json = stem.with_extension("json");
        let bin = stem.with_extension("bin");
        let manifest = CheckpointManifest {
            format_version: FORMAT_VERSION,
            data_file: bin.file_name().expect("stem has a file name").to_string_lossy().into_owned(),
            dtype: "f64".into(),
            byte_order: "little-endian".into(),
            arrays: ARRAYS.iter().map(|s| s.to_string()).collect(),
            segments: segments_of(&self.store.params),
            adam: AdamState { step: self.store.step, beta1: BETA1, beta2: BETA2, epsilon: EPSILON },
            model: ModelSection::from(&self.model),
            run: self.run,
            seed: self.seed,
            best_epoch: self.best_epoch,
            best_val_loss: self.best_val_loss,
        };
        let s = &self.store;
        let bytes: Vec<u8> = [&s.params, &s.first_moment, &s.second_moment]
            .into_iter()
            .flat_map(|p| p.iter().flat_map(|v| v.to_le_bytes()).collect::<Vec<u8>>())
            .collect();
        fs::write(&bin, bytes).map_err(io(&bin))?;
        fs::write(&json, to_pretty_json(&manifest)).map_err(io(&json))?;
        Ok(json)
    }

    pub fn load(json: &Path) -> Result<Self, CheckpointError> {
        let text = fs::read_to_string(json).map_err(io(json))?;
        let m: CheckpointManifest =
            serde_json::from_str(&text).map_err(|source| CheckpointError::Json { path: json.to_path_buf(), source })?;
        let invalid = |reason: String| CheckpointError::Invalid { path: json.to_path_buf(), reason };
        if m.format_version != FORMAT_VERSION {
            return Err(invalid(format!("unsupported format_version {}", m.format_version)));
        }
        if m.dtype != "f64" || m.byte_order != "little-endian" || m.arrays != ARRAYS {
            return Err(invalid("unsupported array encoding".into()));
        }
        let names: Vec<&str> = m.segments.iter().map(|s| s.name.as_str()).collect();
        if names != ParamSet::SEGMENT_NAMES {
            return Err(invalid(format!("unexpected segments {names:?}")));
        }
        let bin = json.with_file_name(&m.data_file);
        let bytes = fs::read(&bin).map_err(io(&bin))?;
        let total: usize = m.segments.iter().map(|s| s.len).sum();
        if bytes.len() != total * 3 * 8 {
            return Err(invalid(format!("{} holds {} bytes, expected {}", bin.display(), bytes.len(), total * 24)));
        }
        let mut values = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")));
        let mut next_set = || {
            let mut take = |n: usize| values.by_ref().take(n).collect::<Vec<f64>>();
            ParamSet {
                autoencoder: take(m.segments[0].len),
                quantum: take(m.segments[1].len),
                classifier: take(m.segments[2].len),
            }
        };
        let params = next_set();
        let first_moment = next_set();
        let second_moment = next_set();
        Ok(Checkpoint {
            model: ModelConfig::from(&m.model),
            store: ParameterStore { params, first_moment, second_moment, step: m.adam.step },
            run: m.run,
            seed: m.seed,
            best_epoch: m.best_epoch,
            best_val_loss: m.best_val_loss,
        })
    }
}
