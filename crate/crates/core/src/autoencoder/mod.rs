//! Auxiliary reconstruction task: per-patch convolutional autoencoder.
//!
//! The encoder repeats `[3×3 conv (4 channels) → ReLU → 2×2 max-pool]` until
//! the patch is 2×2, flattens, and maps densely to `E` features squashed into
//! `[0, π]` by `π·σ(t)`. The decoder mirrors it: dense to `2×2×4`, repeated
//! `[2×2 stride-2 transposed conv → ReLU]` up to the patch size, and a final
//! 3×3 conv to the image channels with a logistic output.
//!
//! One encoder/decoder pair is shared by every patch of every image.

mod layers;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::math;
use layers::Layer;

const HIDDEN: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShapeError {
    #[error("image of side {image} cannot be tiled by {patch}×{patch} patches into a power-of-two grid")]
    Tiling { image: usize, patch: usize },
    #[error("patch size {0} must be a power of two and at least 2")]
    PatchSize(usize),
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("pixel value {0} outside [0, 1]")]
    Range(f64),
    #[error("feature count must be positive")]
    Features,
    #[error("channel count must be positive")]
    Channels,
    #[error("image shapes differ")]
    Mismatch,
    #[error("empty batch")]
    EmptyBatch,
}

/// Square `size × size × channels` image, values in `[0, 1]`, stored
/// row-major with channels fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    size: usize,
    channels: usize,
    values: Vec<f64>,
}

impl ImageTensor {
    pub fn new(size: usize, channels: usize, values: Vec<f64>) -> Result<Self, ShapeError> {
        if channels == 0 {
            return Err(ShapeError::Channels);
        }
        let expected = size * size * channels;
        if values.len() != expected {
            return Err(ShapeError::Length { expected, got: values.len() });
        }
        if let Some(&v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ShapeError::Range(v));
        }
        Ok(ImageTensor { size, channels, values })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.values[(row * self.size + col) * self.channels + ch]
    }
}

/// Non-overlapping `patch × patch` tiles laid out on a `side × side` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    pub side: usize,
    pub patch: usize,
    pub channels: usize,
    /// Row-major over grid positions `(x, y)`, each patch row-major.
    pub patches: Vec<Vec<f64>>,
}

pub fn patchify(image: &ImageTensor, patch: usize) -> Result<PatchGrid, ShapeError> {
    let n = image.size;
    if patch == 0 || !n.is_multiple_of(patch) || !(n / patch).is_power_of_two() {
        return Err(ShapeError::Tiling { image: n, patch });
    }
    let side = n / patch;
    let ch = image.channels;
    let mut patches = Vec::with_capacity(side * side);
    for x in 0..side {
        for y in 0..side {
            let mut p = Vec::with_capacity(patch * patch * ch);
            for r in x * patch..(x + 1) * patch {
                let start = (r * n + y * patch) * ch;
                p.extend_from_slice(&image.values[start..start + patch * ch]);
            }
            patches.push(p);
        }
    }
    Ok(PatchGrid { side, patch, channels: ch, patches })
}

/// Inverse of [`patchify`]. Values are not range-checked.
pub fn unpatchify(grid: &PatchGrid) -> ImageTensor {
    let n = grid.side * grid.patch;
    let ch = grid.channels;
    let mut values = vec![0.0; n * n * ch];
    for (pos, p) in grid.patches.iter().enumerate() {
        let (x, y) = (pos / grid.side, pos % grid.side);
        for pr in 0..grid.patch {
            let dst = ((x * grid.patch + pr) * n + y * grid.patch) * ch;
            values[dst..dst + grid.patch * ch].copy_from_slice(&p[pr * grid.patch * ch..][..grid.patch * ch]);
        }
    }
    ImageTensor { size: n, channels: ch, values }
}

/// Mean squared element difference of one image pair.
pub fn image_mse(original: &ImageTensor, reconstructed: &ImageTensor) -> Result<f64, ShapeError> {
    if original.size != reconstructed.size || original.channels != reconstructed.channels {
        return Err(ShapeError::Mismatch);
    }
    let sum: f64 = original.values.iter().zip(&reconstructed.values).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / original.values.len() as f64)
}

/// Batch reconstruction loss: per-image elementwise MSE, averaged over images.
pub fn reconstruction_loss(originals: &[ImageTensor], reconstructed: &[ImageTensor]) -> Result<f64, ShapeError> {
    if originals.is_empty() {
        return Err(ShapeError::EmptyBatch);
    }
    if originals.len() != reconstructed.len() {
        return Err(ShapeError::Length { expected: originals.len(), got: reconstructed.len() });
    }
    let mut total = 0.0;
    for (a, b) in originals.iter().zip(reconstructed) {
        total += image_mse(a, b)?;
    }
    Ok(total / originals.len() as f64)
}

/// Intermediate activations kept for the encoder backward pass.
#[derive(Debug, Clone)]
pub struct EncoderCache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    pool_arg: Vec<Vec<usize>>,
    flat: Vec<f64>,
    head_pre: Vec<f64>,
}

/// Intermediate activations kept for the decoder backward pass.
#[derive(Debug, Clone)]
pub struct DecoderCache {
    features: Vec<f64>,
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    final_input: Vec<f64>,
    output: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchAutoencoder {
    patch: usize,
    channels: usize,
    features: usize,
    stages: usize,
    encoder: Vec<Layer>,
    decoder: Vec<Layer>,
}

impl PatchAutoencoder {
    pub fn new(patch: usize, channels: usize, features: usize) -> Result<Self, ShapeError> {
        if patch < 2 || !patch.is_power_of_two() {
            return Err(ShapeError::PatchSize(patch));
        }
        if channels == 0 {
            return Err(ShapeError::Channels);
        }
        if features == 0 {
            return Err(ShapeError::Features);
        }
        let stages = (patch / 2).trailing_zeros() as usize;
        let mut encoder = Vec::new();
        let mut ch = channels;
        for _ in 0..stages {
            encoder.push(Layer::Conv3 { input: ch, output: HIDDEN });
            ch = HIDDEN;
        }
        encoder.push(Layer::Dense { input: 4 * ch, output: features });

        let mut decoder = vec![Layer::Dense { input: features, output: 4 * HIDDEN }];
        decoder.extend((0..stages).map(|_| Layer::ConvT2 { input: HIDDEN, output: HIDDEN }));
        decoder.push(Layer::Conv3 { input: HIDDEN, output: channels });
        Ok(PatchAutoencoder { patch, channels, features, stages, encoder, decoder })
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn patch_len(&self) -> usize {
        self.patch * self.patch * self.channels
    }

    pub fn encoder_len(&self) -> usize {
        self.encoder.iter().map(Layer::param_len).sum()
    }

    pub fn decoder_len(&self) -> usize {
        self.decoder.iter().map(Layer::param_len).sum()
    }

    /// Encoder parameters followed by decoder parameters.
    pub fn param_len(&self) -> usize {
        self.encoder_len() + self.decoder_len()
    }

    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.param_len()];
        let mut rest = out.as_mut_slice();
        for layer in self.encoder.iter().chain(&self.decoder) {
            let (head, tail) = rest.split_at_mut(layer.param_len());
            layer.init(rng, head);
            rest = tail;
        }
        out
    }

    fn check(&self, got: usize, expected: usize) -> Result<(), ShapeError> {
        if got == expected {
            Ok(())
        } else {
            Err(ShapeError::Length { expected, got })
        }
    }

    pub fn encode(&self, patch: &[f64], encoder_params: &[f64]) -> Result<Vec<f64>, ShapeError> {
        Ok(self.encode_cached(patch, encoder_params)?.0)
    }

    pub fn encode_cached(&self, patch: &[f64], p: &[f64]) -> Result<(Vec<f64>, EncoderCache), ShapeError> {
        self.check(patch.len(), self.patch_len())?;
        self.check(p.len(), self.encoder_len())?;
        let mut cache = EncoderCache {
            inputs: Vec::with_capacity(self.stages),
            pre: Vec::with_capacity(self.stages),
            pool_arg: Vec::with_capacity(self.stages),
            flat: Vec::new(),
            head_pre: Vec::new(),
        };
        let mut x = patch.to_vec();
        let mut side = self.patch;
        let mut offset = 0;
        for layer in &self.encoder[..self.stages] {
            let Layer::Conv3 { input, output } = *layer else { unreachable!() };
            let lp = &p[offset..offset + layer.param_len()];
            offset += layer.param_len();
            let z = layers::conv3_forward(&x, side, input, output, lp);
            let (pooled, arg) = layers::maxpool_forward(&layers::relu(&z), side, output);
            cache.inputs.push(core::mem::replace(&mut x, pooled));
            cache.pre.push(z);
            cache.pool_arg.push(arg);
            side /= 2;
        }
        let dense = self.encoder[self.stages];
        let Layer::Dense { input, output } = dense else { unreachable!() };
        let t = layers::dense_forward(&x, input, output, &p[offset..]);
        let features = t.iter().map(|v| PI * math::sigmoid(*v)).collect();
        cache.flat = x;
        cache.head_pre = t;
        Ok((features, cache))
    }

    /// Accumulates encoder parameter gradients into `dp`.
    pub fn encode_backward(&self, cache: &EncoderCache, p: &[f64], d_features: &[f64], dp: &mut [f64]) {
        let dt: Vec<f64> = cache
            .head_pre
            .iter()
            .zip(d_features)
            .map(|(t, g)| {
                let s = math::sigmoid(*t);
                g * PI * s * (1.0 - s)
            })
            .collect();
        let offsets = layer_offsets(&self.encoder);
        let dense = self.encoder[self.stages];
        let Layer::Dense { input, output } = dense else { unreachable!() };
        let o = offsets[self.stages];
        let mut dx =
            layers::dense_backward(&cache.flat, input, output, &p[o..], &dt, &mut dp[o..o + dense.param_len()]);
        for s in (0..self.stages).rev() {
            let layer = self.encoder[s];
            let Layer::Conv3 { input, output } = layer else { unreachable!() };
            let side = self.patch >> s;
            let d_relu = layers::maxpool_backward(&cache.pool_arg[s], side * side * output, &dx);
            let dz = layers::relu_backward(&cache.pre[s], &d_relu);
            let o = offsets[s];
            dx = layers::conv3_backward(
                &cache.inputs[s],
                side,
                input,
                output,
                &p[o..o + layer.param_len()],
                &dz,
                &mut dp[o..o + layer.param_len()],
            );
        }
    }

    pub fn decode(&self, features: &[f64], decoder_params: &[f64]) -> Result<Vec<f64>, ShapeError> {
        Ok(self.decode_cached(features, decoder_params)?.0)
    }

    pub fn decode_cached(&self, features: &[f64], p: &[f64]) -> Result<(Vec<f64>, DecoderCache), ShapeError> {
        self.check(features.len(), self.features)?;
        self.check(p.len(), self.decoder_len())?;
        let dense = self.decoder[0];
        let Layer::Dense { input, output } = dense else { unreachable!() };
        let mut offset = dense.param_len();
        let mut x = layers::dense_forward(features, input, output, &p[..offset]);
        let mut cache = DecoderCache {
            features: features.to_vec(),
            inputs: Vec::with_capacity(self.stages),
            pre: Vec::with_capacity(self.stages),
            final_input: Vec::new(),
            output: Vec::new(),
        };
        let mut side = 2;
        for layer in &self.decoder[1..=self.stages] {
            let Layer::ConvT2 { input, output } = *layer else { unreachable!() };
            let z = layers::convt2_forward(&x, side, input, output, &p[offset..offset + layer.param_len()]);
            offset += layer.param_len();
            let a = layers::relu(&z);
            cache.inputs.push(core::mem::replace(&mut x, a));
            cache.pre.push(z);
            side *= 2;
        }
        let last = self.decoder[self.stages + 1];
        let Layer::Conv3 { input, output } = last else { unreachable!() };
        let z = layers::conv3_forward(&x, side, input, output, &p[offset..]);
        let out: Vec<f64> = z.iter().map(|v| math::sigmoid(*v)).collect();
        cache.final_input = x;
        cache.output = out.clone();
        Ok((out, cache))
    }

    /// Accumulates decoder parameter gradients into `dp` and returns the
    /// gradient with respect to the input features.
    pub fn decode_backward(&self, cache: &DecoderCache, p: &[f64], d_output: &[f64], dp: &mut [f64]) -> Vec<f64> {
        let offsets = layer_offsets(&self.decoder);
        let dz: Vec<f64> = cache.output.iter().zip(d_output).map(|(y, g)| g * y * (1.0 - y)).collect();
        let last = self.decoder[self.stages + 1];
        let Layer::Conv3 { input, output } = last else { unreachable!() };
        let o = offsets[self.stages + 1];
        let mut dx = layers::conv3_backward(
            &cache.final_input,
            self.patch,
            input,
            output,
            &p[o..],
            &dz,
            &mut dp[o..o + last.param_len()],
        );
        for s in (0..self.stages).rev() {
            let layer = self.decoder[s + 1];
            let Layer::ConvT2 { input, output } = layer else { unreachable!() };
            let side = 2 << s;
            let dz = layers::relu_backward(&cache.pre[s], &dx);
            let o = offsets[s + 1];
            dx = layers::convt2_backward(
                &cache.inputs[s],
                side,
                input,
                output,
                &p[o..o + layer.param_len()],
                &dz,
                &mut dp[o..o + layer.param_len()],
            );
        }
        let dense = self.decoder[0];
        let Layer::Dense { input, output } = dense else { unreachable!() };
        let len = dense.param_len();
        layers::dense_backward(&cache.features, input, output, &p[..len], &dx, &mut dp[..len])
    }
}

fn layer_offsets(layers: &[Layer]) -> Vec<usize> {
    layers
        .iter()
        .scan(0, |acc, l| {
            let o = *acc;
            *acc += l.param_len();
            Some(o)
        })
        .collect()
}
