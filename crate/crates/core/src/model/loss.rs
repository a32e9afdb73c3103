use alloc::vec::Vec;

use super::ModelError;
use crate::math;

/// Probabilities below this are clipped before taking the log.
pub const LOG_FLOOR: f64 = 1e-12;

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| math::exp(z - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Single-sample `−log p_label`, clipped at [`LOG_FLOOR`].
pub fn sample_cross_entropy(probabilities: &[f64], label: usize) -> Result<f64, ModelError> {
    let p = probabilities.get(label).ok_or(ModelError::Label { label, classes: probabilities.len() })?;
    Ok(-math::ln(p.max(LOG_FLOOR)))
}

/// Mean one-hot cross-entropy over a batch.
pub fn cross_entropy(probabilities: &[Vec<f64>], labels: &[usize]) -> Result<f64, ModelError> {
    if probabilities.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    if probabilities.len() != labels.len() {
        return Err(ModelError::BatchLength { expected: probabilities.len(), got: labels.len() });
    }
    let mut total = 0.0;
    for (p, &y) in probabilities.iter().zip(labels) {
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(ModelError::NotADistribution(s));
        }
        total += sample_cross_entropy(p, y)?;
    }
    Ok(total / probabilities.len() as f64)
}

/// `l_ce + α·l_mse`.
pub fn total_loss(l_ce: f64, l_mse: f64, alpha: f64) -> f64 {
    l_ce + alpha * l_mse
}
