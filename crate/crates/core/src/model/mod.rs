//! The hybrid network: patch autoencoder → quantum feature extractor →
//! dense-softmax classifier, trained jointly on `L_ce + α·L_mse`.

mod adam;
mod loss;
mod metrics;
mod train;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autoencoder::{image_mse, patchify, unpatchify, ImageTensor, PatchAutoencoder, PatchGrid, ShapeError};
use crate::circuit::{grid_log_for, CircuitConfig, CircuitError, MltqnnCircuit};
use crate::exec::Executor;
use crate::math;
use crate::statevector::{adjoint_from_final_state, expectations, SimError};

pub use adam::{adam_step, BETA1, BETA2, EPSILON};
pub use loss::{cross_entropy, sample_cross_entropy, softmax, total_loss, LOG_FLOOR};
pub use metrics::{evaluate, f1_score, ClassScores, EvalReport};
pub use train::{train, train_run, EpochMetrics, RunResult, StepRecord, TrainError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },
    #[error("at least two classes are required")]
    Classes,
    #[error("alpha must be finite and non-negative, got {0}")]
    Alpha(f64),
    #[error("learning rate must be finite and positive, got {0}")]
    LearningRate(f64),
    #[error("batch size must be positive")]
    BatchSize,
    #[error("runs must be at least 1")]
    Runs,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("expected {expected} entries, got {got}")]
    BatchLength { expected: usize, got: usize },
    #[error("probabilities sum to {0}, not 1")]
    NotADistribution(f64),
    #[error("parameter layout does not match the model")]
    Layout,
    #[error("image is {got_size}×{got_size}×{got_channels}, model expects {size}×{size}×{channels}")]
    ImageShape { size: usize, channels: usize, got_size: usize, got_channels: usize },
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("non-finite loss")]
    NonFiniteLoss,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
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

impl ModelConfig {
    /// The 12-qubit, 64-feature setup on 32×32 images with 4×4 patches.
    pub fn canonical(channels: usize, num_classes: usize) -> Self {
        ModelConfig {
            image_size: 32,
            patch: 4,
            features: 9,
            blocks: 2,
            kernels: 2,
            channels,
            num_classes,
            alpha: 5.0,
            learning_rate: 0.01,
            batch_size: 50,
            epochs: 200,
            runs: 3,
            seed: 0,
            reconstruction: true,
            lwm: true,
        }
    }

    pub fn circuit_config(&self) -> Result<CircuitConfig, ModelError> {
        let config = CircuitConfig {
            grid_log: grid_log_for(self.image_size, self.patch)?,
            features: self.features,
            blocks: self.blocks,
            kernels: self.kernels,
            lwm: self.lwm,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.circuit_config()?;
        if self.num_classes < 2 {
            return Err(ModelError::Classes);
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(ModelError::Alpha(self.alpha));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ModelError::LearningRate(self.learning_rate));
        }
        if self.batch_size == 0 {
            return Err(ModelError::BatchSize);
        }
        if self.runs == 0 {
            return Err(ModelError::Runs);
        }
        Ok(())
    }

    /// α when the reconstruction branch is on, zero otherwise.
    pub fn effective_alpha(&self) -> f64 {
        if self.reconstruction {
            self.alpha
        } else {
            0.0
        }
    }
}

/// One flat vector per trainable segment.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub autoencoder: Vec<f64>,
    pub quantum: Vec<f64>,
    pub classifier: Vec<f64>,
}

impl ParamSet {
    pub const SEGMENT_NAMES: [&'static str; 3] = ["autoencoder", "quantum", "classifier"];

    pub fn zeros_like(&self) -> Self {
        ParamSet {
            autoencoder: vec![0.0; self.autoencoder.len()],
            quantum: vec![0.0; self.quantum.len()],
            classifier: vec![0.0; self.classifier.len()],
        }
    }

    pub fn segments(&self) -> [&[f64]; 3] {
        [&self.autoencoder, &self.quantum, &self.classifier]
    }

    pub fn segments_mut(&mut self) -> [&mut Vec<f64>; 3] {
        [&mut self.autoencoder, &mut self.quantum, &mut self.classifier]
    }

    pub fn len(&self) -> usize {
        self.autoencoder.len() + self.quantum.len() + self.classifier.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn same_layout(&self, other: &ParamSet) -> bool {
        self.autoencoder.len() == other.autoencoder.len()
            && self.quantum.len() == other.quantum.len()
            && self.classifier.len() == other.classifier.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.autoencoder.iter().chain(&self.quantum).chain(&self.classifier)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.autoencoder.iter_mut().chain(self.quantum.iter_mut()).chain(self.classifier.iter_mut())
    }

    fn add_assign(&mut self, other: &ParamSet) {
        for (a, b) in self.iter_mut().zip(other.iter()) {
            *a += b;
        }
    }
}

/// Parameters plus Adam state.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterStore {
    pub params: ParamSet,
    pub first_moment: ParamSet,
    pub second_moment: ParamSet,
    pub step: u64,
}

impl ParameterStore {
    /// Fresh optimizer state around the given values.
    pub fn new(params: ParamSet) -> Self {
        let first_moment = params.zeros_like();
        let second_moment = params.zeros_like();
        ParameterStore { params, first_moment, second_moment, step: 0 }
    }

    pub fn is_consistent(&self) -> bool {
        self.params.same_layout(&self.first_moment) && self.params.same_layout(&self.second_moment)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub image: ImageTensor,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub probabilities: Vec<f64>,
    pub reconstruction: ImageTensor,
    /// Encoder features of every patch, flattened `[x][y][feature]`.
    pub processed: Vec<f64>,
    pub features: Vec<f64>,
}

/// Per-sample losses and parameter gradients, already scaled by the
/// sample's weight in the batch mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGradient {
    pub grads: ParamSet,
    pub l_ce: f64,
    pub l_mse: f64,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchGradient {
    pub grads: ParamSet,
    pub l_ce: f64,
    pub l_mse: f64,
    pub loss: f64,
    pub correct: usize,
}

#[derive(Debug, Clone)]
pub struct HybridModel {
    config: ModelConfig,
    autoencoder: PatchAutoencoder,
    circuit: MltqnnCircuit,
}

impl HybridModel {
    pub fn new(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let circuit = MltqnnCircuit::new(config.circuit_config()?)?;
        let autoencoder = PatchAutoencoder::new(config.patch, config.channels, config.features)?;
        Ok(HybridModel { config, autoencoder, circuit })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn autoencoder(&self) -> &PatchAutoencoder {
        &self.autoencoder
    }

    pub fn circuit(&self) -> &MltqnnCircuit {
        &self.circuit
    }

    pub fn feature_len(&self) -> usize {
        self.circuit.feature_len()
    }

    pub fn classifier_len(&self) -> usize {
        (self.feature_len() + 1) * self.config.num_classes
    }

    /// A zero-valued parameter set with this model's layout.
    pub fn zero_params(&self) -> ParamSet {
        ParamSet {
            autoencoder: vec![0.0; self.autoencoder.param_len()],
            quantum: vec![0.0; self.circuit.param_arity()],
            classifier: vec![0.0; self.classifier_len()],
        }
    }

    /// Glorot-uniform classical weights with zero biases, quantum angles
    /// uniform in `[0, 2π)`.
    pub fn init_params(&self, seed: u64) -> ParameterStore {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let autoencoder = self.autoencoder.init(&mut rng);
        let quantum = (0..self.circuit.param_arity()).map(|_| rng.random_range(0.0..TAU)).collect();
        let f = self.feature_len();
        let c = self.config.num_classes;
        let limit = math::sqrt(6.0 / (f + c) as f64);
        let mut classifier = vec![0.0; self.classifier_len()];
        for w in &mut classifier[..f * c] {
            *w = rng.random_range(-limit..limit);
        }
        ParameterStore::new(ParamSet { autoencoder, quantum, classifier })
    }

    pub fn check_params(&self, params: &ParamSet) -> Result<(), ModelError> {
        if params.same_layout(&self.zero_params()) {
            Ok(())
        } else {
            Err(ModelError::Layout)
        }
    }

    fn check_image(&self, image: &ImageTensor) -> Result<(), ModelError> {
        let (size, channels) = (self.config.image_size, self.config.channels);
        if image.size() != size || image.channels() != channels {
            return Err(ModelError::ImageShape {
                size,
                channels,
                got_size: image.size(),
                got_channels: image.channels(),
            });
        }
        Ok(())
    }

    fn logits(&self, features: &[f64], classifier: &[f64]) -> Vec<f64> {
        let f = features.len();
        let (w, b) = classifier.split_at(f * self.config.num_classes);
        (0..self.config.num_classes)
            .map(|k| b[k] + w[k * f..][..f].iter().zip(features).map(|(a, x)| a * x).sum::<f64>())
            .collect()
    }

    pub fn forward(&self, image: &ImageTensor, params: &ParamSet) -> Result<ForwardOutput, ModelError> {
        self.check_image(image)?;
        self.check_params(params)?;
        let (enc_p, dec_p) = params.autoencoder.split_at(self.autoencoder.encoder_len());
        let grid = patchify(image, self.config.patch)?;
        let mut processed = Vec::with_capacity(grid.patches.len() * self.config.features);
        let mut recon_patches = Vec::with_capacity(grid.patches.len());
        for patch in &grid.patches {
            let feats = self.autoencoder.encode(patch, enc_p)?;
            recon_patches.push(self.autoencoder.decode(&feats, dec_p)?);
            processed.extend(feats);
        }
        let reconstruction = unpatchify(&PatchGrid { patches: recon_patches, ..grid });
        let features = self.circuit.quantum_forward(&processed, &params.quantum)?;
        let probabilities = softmax(&self.logits(&features, &params.classifier));
        Ok(ForwardOutput { probabilities, reconstruction, processed, features })
    }

    /// Loss terms and gradients of one sample, each scaled by `weight`
    /// (`1/B` inside a batch of `B`).
    pub fn sample_gradient(
        &self,
        image: &ImageTensor,
        label: usize,
        params: &ParamSet,
        weight: f64,
    ) -> Result<SampleGradient, ModelError> {
        self.check_image(image)?;
        self.check_params(params)?;
        let c = self.config.num_classes;
        if label >= c {
            return Err(ModelError::Label { label, classes: c });
        }
        let ae = &self.autoencoder;
        let e = self.config.features;
        let enc_len = ae.encoder_len();
        let (enc_p, dec_p) = params.autoencoder.split_at(enc_len);

        let grid = patchify(image, self.config.patch)?;
        let mut processed = Vec::with_capacity(grid.patches.len() * e);
        let mut enc_caches = Vec::with_capacity(grid.patches.len());
        let mut dec_caches = Vec::with_capacity(grid.patches.len());
        let mut recon_patches = Vec::with_capacity(grid.patches.len());
        for patch in &grid.patches {
            let (feats, ec) = ae.encode_cached(patch, enc_p)?;
            let (out, dc) = ae.decode_cached(&feats, dec_p)?;
            processed.extend_from_slice(&feats);
            enc_caches.push(ec);
            dec_caches.push(dc);
            recon_patches.push(out);
        }

        let program = self.circuit.program();
        let state = self.circuit.final_state(&processed, &params.quantum)?;
        let ops = self.circuit.operators();
        let features = expectations(&state, ops)?;
        let logits = self.logits(&features, &params.classifier);
        let probs = softmax(&logits);
        let l_ce = sample_cross_entropy(&probs, label)?;
        let recon_grid = PatchGrid { patches: recon_patches, ..grid.clone() };
        let l_mse = image_mse(image, &unpatchify(&recon_grid))?;
        if !(l_ce.is_finite() && l_mse.is_finite()) {
            return Err(ModelError::NonFiniteLoss);
        }
        let correct = argmax(&probs) == label;

        let mut grads = self.zero_params();
        let f = features.len();
        let dlogits: Vec<f64> =
            probs.iter().enumerate().map(|(k, p)| weight * (p - if k == label { 1.0 } else { 0.0 })).collect();
        let (w, _) = params.classifier.split_at(f * c);
        let mut cotangents = vec![0.0; f];
        {
            let (dw, db) = grads.classifier.split_at_mut(f * c);
            for (k, g) in dlogits.iter().enumerate() {
                db[k] += g;
                for i in 0..f {
                    dw[k * f + i] += g * features[i];
                    cotangents[i] += g * w[k * f + i];
                }
            }
        }

        let adj = adjoint_from_final_state(program, &processed, &params.quantum, state, ops, &cotangents)?;
        grads.quantum = adj.params;

        let alpha = self.config.effective_alpha();
        let scale = weight * alpha * 2.0 / image.values().len() as f64;
        let (denc, ddec) = grads.autoencoder.split_at_mut(enc_len);
        for (s, (ec, dc)) in enc_caches.iter().zip(&dec_caches).enumerate() {
            let mut d_feat = adj.data[s * e..(s + 1) * e].to_vec();
            if alpha != 0.0 {
                let d_out: Vec<f64> =
                    recon_grid.patches[s].iter().zip(&grid.patches[s]).map(|(r, x)| scale * (r - x)).collect();
                let back = ae.decode_backward(dc, dec_p, &d_out, ddec);
                for (a, b) in d_feat.iter_mut().zip(back) {
                    *a += b;
                }
            }
            ae.encode_backward(ec, enc_p, &d_feat, denc);
        }
        Ok(SampleGradient { grads, l_ce, l_mse, correct })
    }

    /// Mean losses and gradients over `samples[indices]`, reduced in index
    /// order whatever the executor.
    pub fn batch_gradient<X: Executor>(
        &self,
        samples: &[LabeledImage],
        indices: &[usize],
        params: &ParamSet,
        exec: &X,
    ) -> Result<BatchGradient, ModelError> {
        if indices.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        let weight = 1.0 / indices.len() as f64;
        let per_sample = exec.map_indexed(indices.len(), |i| {
            let s = &samples[indices[i]];
            self.sample_gradient(&s.image, s.label, params, weight)
        });
        let mut grads = self.zero_params();
        let (mut ce, mut mse, mut correct) = (0.0, 0.0, 0);
        for r in per_sample {
            let r = r?;
            grads.add_assign(&r.grads);
            ce += r.l_ce;
            mse += r.l_mse;
            correct += usize::from(r.correct);
        }
        let l_ce = ce * weight;
        let l_mse = mse * weight;
        let loss = total_loss(l_ce, l_mse, self.config.effective_alpha());
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss);
        }
        Ok(BatchGradient { grads, l_ce, l_mse, loss, correct })
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
