// Forward/backward kernels for the small per-patch networks. Activations are
// square `side × side × channels` maps stored row-major, channel fastest.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Layer {
    /// 3×3, stride 1, zero "same" padding. Weights `[out][in][3][3]`.
    Conv3 { input: usize, output: usize },
    /// 2×2, stride 2 transposed convolution. Weights `[in][out][2][2]`.
    ConvT2 { input: usize, output: usize },
    /// Weights `[out][in]`.
    Dense { input: usize, output: usize },
}

impl Layer {
    pub(crate) fn weight_len(&self) -> usize {
        match *self {
            Layer::Conv3 { input, output } => input * output * 9,
            Layer::ConvT2 { input, output } => input * output * 4,
            Layer::Dense { input, output } => input * output,
        }
    }

    fn bias_len(&self) -> usize {
        match *self {
            Layer::Conv3 { output, .. } | Layer::ConvT2 { output, .. } | Layer::Dense { output, .. } => output,
        }
    }

    pub(crate) fn param_len(&self) -> usize {
        self.weight_len() + self.bias_len()
    }

    fn fans(&self) -> (usize, usize) {
        match *self {
            Layer::Conv3 { input, output } => (input * 9, output * 9),
            Layer::ConvT2 { input, output } => (input * 4, output * 4),
            Layer::Dense { input, output } => (input, output),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub(crate) fn init<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let (fan_in, fan_out) = self.fans();
        let limit = math::sqrt(6.0 / (fan_in + fan_out) as f64);
        let (w, b) = out.split_at_mut(self.weight_len());
        for v in w {
            *v = rng.random_range(-limit..limit);
        }
        b.fill(0.0);
    }
}

pub(crate) fn conv3_forward(x: &[f64], side: usize, input: usize, output: usize, p: &[f64]) -> Vec<f64> {
    let (w, b) = p.split_at(input * output * 9);
    let mut y = vec![0.0; side * side * output];
    for r in 0..side {
        for c in 0..side {
            let out = &mut y[(r * side + c) * output..][..output];
            out.copy_from_slice(b);
            for dr in 0..3 {
                let Some(rr) = (r + dr).checked_sub(1).filter(|&v| v < side) else { continue };
                for dc in 0..3 {
                    let Some(cc) = (c + dc).checked_sub(1).filter(|&v| v < side) else { continue };
                    let xin = &x[(rr * side + cc) * input..][..input];
                    for (o, acc) in out.iter_mut().enumerate() {
                        for (i, xv) in xin.iter().enumerate() {
                            *acc += w[((o * input + i) * 3 + dr) * 3 + dc] * xv;
                        }
                    }
                }
            }
        }
    }
    y
}

/// Accumulates parameter gradients into `dp`, returns the input gradient.
pub(crate) fn conv3_backward(
    x: &[f64],
    side: usize,
    input: usize,
    output: usize,
    p: &[f64],
    dy: &[f64],
    dp: &mut [f64],
) -> Vec<f64> {
    let w = &p[..input * output * 9];
    let (dw, db) = dp.split_at_mut(input * output * 9);
    let mut dx = vec![0.0; side * side * input];
    for r in 0..side {
        for c in 0..side {
            let g = &dy[(r * side + c) * output..][..output];
            for (o, gv) in g.iter().enumerate() {
                db[o] += gv;
            }
            for dr in 0..3 {
                let Some(rr) = (r + dr).checked_sub(1).filter(|&v| v < side) else { continue };
                for dc in 0..3 {
                    let Some(cc) = (c + dc).checked_sub(1).filter(|&v| v < side) else { continue };
                    let base = (rr * side + cc) * input;
                    for (o, gv) in g.iter().enumerate() {
                        for i in 0..input {
                            let wi = ((o * input + i) * 3 + dr) * 3 + dc;
                            dw[wi] += gv * x[base + i];
                            dx[base + i] += gv * w[wi];
                        }
                    }
                }
            }
        }
    }
    dx
}

/// 2×2 max-pool with stride 2. Returns the pooled map and, per output, the
/// flat input index that won (first maximum on ties).
pub(crate) fn maxpool_forward(x: &[f64], side: usize, ch: usize) -> (Vec<f64>, Vec<usize>) {
    let half = side / 2;
    let mut y = vec![0.0; half * half * ch];
    let mut arg = vec![0usize; half * half * ch];
    for r in 0..half {
        for c in 0..half {
            for k in 0..ch {
                let mut best = usize::MAX;
                for (dr, dc) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let idx = ((2 * r + dr) * side + 2 * c + dc) * ch + k;
                    if best == usize::MAX || x[idx] > x[best] {
                        best = idx;
                    }
                }
                let o = (r * half + c) * ch + k;
                y[o] = x[best];
                arg[o] = best;
            }
        }
    }
    (y, arg)
}

pub(crate) fn maxpool_backward(arg: &[usize], input_len: usize, dy: &[f64]) -> Vec<f64> {
    let mut dx = vec![0.0; input_len];
    for (&a, g) in arg.iter().zip(dy) {
        dx[a] += g;
    }
    dx
}

pub(crate) fn convt2_forward(x: &[f64], side: usize, input: usize, output: usize, p: &[f64]) -> Vec<f64> {
    let (w, b) = p.split_at(input * output * 4);
    let big = 2 * side;
    let mut y = vec![0.0; big * big * output];
    for r in 0..side {
        for c in 0..side {
            let xin = &x[(r * side + c) * input..][..input];
            for dr in 0..2 {
                for dc in 0..2 {
                    let out = &mut y[((2 * r + dr) * big + 2 * c + dc) * output..][..output];
                    for (o, acc) in out.iter_mut().enumerate() {
                        *acc = b[o];
                        for (i, xv) in xin.iter().enumerate() {
                            *acc += w[((i * output + o) * 2 + dr) * 2 + dc] * xv;
                        }
                    }
                }
            }
        }
    }
    y
}

pub(crate) fn convt2_backward(
    x: &[f64],
    side: usize,
    input: usize,
    output: usize,
    p: &[f64],
    dy: &[f64],
    dp: &mut [f64],
) -> Vec<f64> {
    let w = &p[..input * output * 4];
    let (dw, db) = dp.split_at_mut(input * output * 4);
    let big = 2 * side;
    let mut dx = vec![0.0; side * side * input];
    for r in 0..side {
        for c in 0..side {
            let base = (r * side + c) * input;
            for dr in 0..2 {
                for dc in 0..2 {
                    let g = &dy[((2 * r + dr) * big + 2 * c + dc) * output..][..output];
                    for (o, gv) in g.iter().enumerate() {
                        db[o] += gv;
                        for i in 0..input {
                            let wi = ((i * output + o) * 2 + dr) * 2 + dc;
                            dw[wi] += gv * x[base + i];
                            dx[base + i] += gv * w[wi];
                        }
                    }
                }
            }
        }
    }
    dx
}

pub(crate) fn dense_forward(x: &[f64], input: usize, output: usize, p: &[f64]) -> Vec<f64> {
    let (w, b) = p.split_at(input * output);
    (0..output).map(|o| b[o] + w[o * input..][..input].iter().zip(x).map(|(a, v)| a * v).sum::<f64>()).collect()
}

pub(crate) fn dense_backward(
    x: &[f64],
    input: usize,
    output: usize,
    p: &[f64],
    dy: &[f64],
    dp: &mut [f64],
) -> Vec<f64> {
    let w = &p[..input * output];
    let (dw, db) = dp.split_at_mut(input * output);
    let mut dx = vec![0.0; input];
    for (o, g) in dy.iter().enumerate() {
        db[o] += g;
        for i in 0..input {
            dw[o * input + i] += g * x[i];
            dx[i] += g * w[o * input + i];
        }
    }
    dx
}

pub(crate) fn relu(z: &[f64]) -> Vec<f64> {
    z.iter().map(|v| v.max(0.0)).collect()
}

pub(crate) fn relu_backward(z: &[f64], dy: &[f64]) -> Vec<f64> {
    z.iter().zip(dy).map(|(zv, g)| if *zv > 0.0 { *g } else { 0.0 }).collect()
}
