//! Dataset storage: a `manifest.json` plus per-split tensor and label files.
//!
//! Tensors are little-endian `f32`, laid out `(sample, row, col, channel)`;
//! labels are little-endian `u16`. Pixel values are min-max normalized per
//! channel with constants taken from the training split and recorded in the
//! manifest.

use std::fs;
use std::path::{Path, PathBuf};

use mltqnn_core::autoencoder::ImageTensor;
use mltqnn_core::model::LabeledImage;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{}: file not found", .0.display())]
    Missing(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: malformed manifest: {source}", path.display())]
    Manifest { path: PathBuf, source: serde_json::Error },
    #[error("unsupported manifest format_version {0}")]
    Version(u32),
    #[error("{}: expected {expected} bytes for {count} samples, found {got}", path.display())]
    CountMismatch { path: PathBuf, count: usize, expected: u64, got: u64 },
    #[error("{split} sample {index}: label {label} outside 0..{classes}")]
    LabelRange { split: &'static str, index: usize, label: usize, classes: usize },
    #[error("invalid manifest: {0}")]
    Invalid(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            DataError::Missing(path.to_path_buf())
        } else {
            DataError::Io { path: path.to_path_buf(), source }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitEntry {
    pub count: usize,
    pub tensors: String,
    pub labels: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Splits {
    pub train: SplitEntry,
    pub validation: SplitEntry,
    pub test: SplitEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub name: String,
    /// `[N, N, channels]`.
    pub image_shape: [usize; 3],
    pub num_classes: usize,
    pub splits: Splits,
    /// Per-channel `[min, max]` of the raw training tensors.
    pub normalization: Vec<[f64; 2]>,
}

impl DatasetManifest {
    pub fn image_size(&self) -> usize {
        self.image_shape[0]
    }

    pub fn channels(&self) -> usize {
        self.image_shape[2]
    }

    fn validate(&self) -> Result<(), DataError> {
        if self.format_version != FORMAT_VERSION {
            return Err(DataError::Version(self.format_version));
        }
        let [h, w, c] = self.image_shape;
        if h == 0 || h != w || c == 0 {
            return Err(DataError::Invalid(format!(
                "image_shape {:?} must be [N, N, C] with N, C > 0",
                self.image_shape
            )));
        }
        if self.num_classes == 0 || self.num_classes > u16::MAX as usize + 1 {
            return Err(DataError::Invalid(format!("num_classes {} out of range", self.num_classes)));
        }
        if self.normalization.len() != c {
            return Err(DataError::Invalid(format!(
                "normalization has {} channels, image_shape has {c}",
                self.normalization.len()
            )));
        }
        if self.normalization.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DataError::Invalid("normalization constants must be finite".into()));
        }
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self, DataError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let manifest: DatasetManifest =
            serde_json::from_str(&text).map_err(|source| DataError::Manifest { path: path.clone(), source })?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Raw, unnormalized split contents.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSplit {
    pub values: Vec<f32>,
    pub labels: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub train: Vec<LabeledImage>,
    pub validation: Vec<LabeledImage>,
    pub test: Vec<LabeledImage>,
}

fn read_exact_len(path: &Path, count: usize, width: usize) -> Result<Vec<u8>, DataError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let expected = (count * width) as u64;
    if bytes.len() as u64 != expected {
        return Err(DataError::CountMismatch { path: path.to_path_buf(), count, expected, got: bytes.len() as u64 });
    }
    Ok(bytes)
}

pub fn read_raw_split(dir: &Path, manifest: &DatasetManifest, entry: &SplitEntry) -> Result<RawSplit, DataError> {
    let [n, _, c] = manifest.image_shape;
    let tensors = read_exact_len(&dir.join(&entry.tensors), entry.count, n * n * c * 4)?;
    let labels = read_exact_len(&dir.join(&entry.labels), entry.count, 2)?;
    Ok(RawSplit {
        values: tensors.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect(),
        labels: labels.chunks_exact(2).map(|b| u16::from_le_bytes([b[0], b[1]])).collect(),
    })
}

/// Per-channel `[min, max]` over interleaved `values`.
pub fn channel_ranges(values: &[f32], channels: usize) -> Vec<[f64; 2]> {
    let mut out = vec![[f64::INFINITY, f64::NEG_INFINITY]; channels];
    for (i, v) in values.iter().enumerate() {
        let r = &mut out[i % channels];
        r[0] = r[0].min(*v as f64);
        r[1] = r[1].max(*v as f64);
    }
    for r in &mut out {
        if r[0] > r[1] {
            *r = [0.0, 0.0];
        }
    }
    out
}

/// `(v − min)/(max − min)` clamped to `[0, 1]`; a zero-width range maps to 0.
pub fn normalize_value(v: f64, [lo, hi]: [f64; 2]) -> f64 {
    if hi <= lo {
        0.0
    } else {
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    }
}

pub fn normalize(values: &[f32], ranges: &[[f64; 2]]) -> Vec<f64> {
    let c = ranges.len();
    values.iter().enumerate().map(|(i, v)| normalize_value(*v as f64, ranges[i % c])).collect()
}

fn to_samples(split: &'static str, raw: RawSplit, manifest: &DatasetManifest) -> Result<Vec<LabeledImage>, DataError> {
    let [n, _, c] = manifest.image_shape;
    let per = n * n * c;
    let values = normalize(&raw.values, &manifest.normalization);
    raw.labels
        .iter()
        .enumerate()
        .map(|(index, &label)| {
            let label = label as usize;
            if label >= manifest.num_classes {
                return Err(DataError::LabelRange { split, index, label, classes: manifest.num_classes });
            }
            let image = ImageTensor::new(n, c, values[index * per..(index + 1) * per].to_vec())
                .map_err(|e| DataError::Invalid(e.to_string()))?;
            Ok(LabeledImage { image, label })
        })
        .collect()
}

pub fn load_dataset(dir: &Path) -> Result<Dataset, DataError> {
    if !dir.is_dir() {
        return Err(DataError::Missing(dir.to_path_buf()));
    }
    let manifest = DatasetManifest::read(dir)?;
    let load = |name: &'static str, entry: &SplitEntry| {
        let raw = read_raw_split(dir, &manifest, entry)?;
        to_samples(name, raw, &manifest)
    };
    let train = load("train", &manifest.splits.train)?;
    let validation = load("validation", &manifest.splits.validation)?;
    let test = load("test", &manifest.splits.test)?;
    Ok(Dataset { manifest, train, validation, test })
}

/// Writes one split's tensor and label files.
pub fn write_split(dir: &Path, entry: &SplitEntry, raw: &RawSplit) -> Result<(), DataError> {
    let tpath = dir.join(&entry.tensors);
    let bytes: Vec<u8> = raw.values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(&tpath, bytes).map_err(io_err(&tpath))?;
    let lpath = dir.join(&entry.labels);
    let bytes: Vec<u8> = raw.labels.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(&lpath, bytes).map_err(io_err(&lpath))
}

pub fn write_manifest(dir: &Path, manifest: &DatasetManifest) -> Result<(), DataError> {
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_json()).map_err(io_err(&path))
}

fn split_entry(name: &str, count: usize) -> SplitEntry {
    SplitEntry { count, tensors: format!("{name}_images.f32"), labels: format!("{name}_labels.u16") }
}

/// Stratified, seeded subsample keeping `round(fraction · n_c)` samples of
/// every class (at least one if the class is present). Original order is
/// preserved.
pub fn subsample_fraction(samples: &[LabeledImage], fraction: f64, seed: u64) -> Result<Vec<LabeledImage>, String> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(format!("train fraction {fraction} must lie in (0, 1]"));
    }
    let classes = samples.iter().map(|s| s.label + 1).max().unwrap_or(0);
    let keep = (0..classes).map(|c| (c, fraction)).collect::<Vec<_>>();
    Ok(select_by_class(samples, &keep, seed))
}

/// Keeps `round(fraction · n_class)` samples (at least one) of `class` and
/// every sample of the other classes.
pub fn subsample_minority(
    samples: &[LabeledImage],
    class: usize,
    fraction: f64,
    seed: u64,
) -> Result<Vec<LabeledImage>, String> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(format!("minority fraction {fraction} must lie in (0, 1]"));
    }
    Ok(select_by_class(samples, &[(class, fraction)], seed))
}

fn select_by_class(samples: &[LabeledImage], fractions: &[(usize, f64)], seed: u64) -> Vec<LabeledImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![true; samples.len()];
    for &(class, fraction) in fractions {
        let mut idx: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].label == class).collect();
        if idx.is_empty() {
            continue;
        }
        let n = ((idx.len() as f64 * fraction).round() as usize).clamp(1, idx.len());
        idx.shuffle(&mut rng);
        for &i in &idx[n..] {
            keep[i] = false;
        }
    }
    samples.iter().zip(keep).filter(|(_, k)| *k).map(|(s, _)| s.clone()).collect()
}

/// Parses `CLASS:FRACTION`.
pub fn parse_minority(spec: &str) -> Result<(usize, f64), String> {
    let (c, f) = spec.split_once(':').ok_or_else(|| format!("expected CLASS:FRACTION, got {spec:?}"))?;
    let class = c.trim().parse().map_err(|_| format!("bad class in {spec:?}"))?;
    let fraction = f.trim().parse().map_err(|_| format!("bad fraction in {spec:?}"))?;
    Ok((class, fraction))
}

/// Centers `image` on a zero canvas of side `size`.
pub fn zero_pad(image: &ImageTensor, size: usize) -> Result<ImageTensor, String> {
    let n = image.size();
    if size < n {
        return Err(format!("cannot pad a {n}×{n} image to {size}×{size}"));
    }
    let c = image.channels();
    let off = (size - n) / 2;
    let mut values = vec![0.0; size * size * c];
    for r in 0..n {
        let dst = ((r + off) * size + off) * c;
        values[dst..dst + n * c].copy_from_slice(&image.values()[r * n * c..(r + 1) * n * c]);
    }
    ImageTensor::new(size, c, values).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub size: usize,
    pub channels: usize,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// 4 classes of 32×32×4 gratings, 200/100/100 samples, σ = 0.1.
    pub fn standard(seed: u64) -> Self {
        SyntheticSpec {
            num_classes: 4,
            size: 32,
            channels: 4,
            train: 200,
            validation: 100,
            test: 100,
            sigma: 0.1,
            seed,
        }
    }
}

/// Grating period in pixels.
pub const GRATING_PERIOD: f64 = 8.0;

/// Noise-free class template: a sinusoidal grating at angle `κπ/C`, each
/// channel phase-shifted by a quarter period.
pub fn grating(spec: &SyntheticSpec, class: usize) -> Vec<f64> {
    let theta = class as f64 * std::f64::consts::PI / spec.num_classes as f64;
    let (s, c) = theta.sin_cos();
    let n = spec.size;
    let mut out = Vec::with_capacity(n * n * spec.channels);
    for r in 0..n {
        for col in 0..n {
            let u = col as f64 * c + r as f64 * s;
            for ch in 0..spec.channels {
                let phase = std::f64::consts::TAU * u / GRATING_PERIOD + ch as f64 * std::f64::consts::FRAC_PI_2;
                out.push(0.5 + 0.5 * phase.sin());
            }
        }
    }
    out
}

fn synth_split(spec: &SyntheticSpec, count: usize, templates: &[Vec<f64>], rng: &mut ChaCha8Rng) -> RawSplit {
    let mut values = Vec::with_capacity(count * templates[0].len());
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let class = i % spec.num_classes;
        labels.push(class as u16);
        for t in &templates[class] {
            let noise = if spec.sigma > 0.0 { rng.random_range(-spec.sigma..=spec.sigma) } else { 0.0 };
            values.push((t + noise).clamp(0.0, 1.0) as f32);
        }
    }
    RawSplit { values, labels }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticReport {
    pub manifest: DatasetManifest,
    /// Nearest-centroid accuracy on the test split, centroids from train.
    pub nearest_centroid_accuracy: f64,
}

pub fn generate_synthetic(spec: &SyntheticSpec, dir: &Path) -> Result<SyntheticReport, DataError> {
    if spec.num_classes == 0 || spec.size == 0 || spec.channels == 0 || spec.sigma.is_nan() || spec.sigma < 0.0 {
        return Err(DataError::Invalid(format!("invalid synthetic spec {spec:?}")));
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let templates: Vec<Vec<f64>> = (0..spec.num_classes).map(|k| grating(spec, k)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let train = synth_split(spec, spec.train, &templates, &mut rng);
    let validation = synth_split(spec, spec.validation, &templates, &mut rng);
    let test = synth_split(spec, spec.test, &templates, &mut rng);
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        name: format!("synthetic-gratings-{}c-{}px-seed{}", spec.num_classes, spec.size, spec.seed),
        image_shape: [spec.size, spec.size, spec.channels],
        num_classes: spec.num_classes,
        splits: Splits {
            train: split_entry("train", spec.train),
            validation: split_entry("validation", spec.validation),
            test: split_entry("test", spec.test),
        },
        normalization: channel_ranges(&train.values, spec.channels),
    };
    write_split(dir, &manifest.splits.train, &train)?;
    write_split(dir, &manifest.splits.validation, &validation)?;
    write_split(dir, &manifest.splits.test, &test)?;
    write_manifest(dir, &manifest)?;
    let acc = nearest_centroid_accuracy(&train, &test, spec.size * spec.size * spec.channels, spec.num_classes);
    Ok(SyntheticReport { manifest, nearest_centroid_accuracy: acc })
}

/// Classifies each test image by the closest (Euclidean) training-class mean
/// on raw pixels; returns the fraction correct (0 for an empty test split).
pub fn nearest_centroid_accuracy(train: &RawSplit, test: &RawSplit, per: usize, classes: usize) -> f64 {
    let mut sums = vec![vec![0.0f64; per]; classes];
    let mut counts = vec![0usize; classes];
    for (i, &l) in train.labels.iter().enumerate() {
        counts[l as usize] += 1;
        for (s, v) in sums[l as usize].iter_mut().zip(&train.values[i * per..(i + 1) * per]) {
            *s += *v as f64;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        s.iter_mut().for_each(|v| *v /= n.max(1) as f64);
    }
    if test.labels.is_empty() {
        return 0.0;
    }
    let correct = test
        .labels
        .iter()
        .enumerate()
        .filter(|&(i, &l)| {
            let x = &test.values[i * per..(i + 1) * per];
            let best = (0..classes).filter(|&k| counts[k] > 0).min_by(|&a, &b| {
                let da: f64 = sums[a].iter().zip(x).map(|(m, v)| (m - *v as f64).powi(2)).sum();
                let db: f64 = sums[b].iter().zip(x).map(|(m, v)| (m - *v as f64).powi(2)).sum();
                da.total_cmp(&db)
            });
            best == Some(l as usize)
        })
        .count();
    correct as f64 / test.labels.len() as f64
}
