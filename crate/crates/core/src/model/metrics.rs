use alloc::vec;
use alloc::vec::Vec;

use super::{argmax, total_loss, HybridModel, LabeledImage, ModelError, ParamSet};
use crate::autoencoder::image_mse;
use crate::exec::Executor;
use crate::model::sample_cross_entropy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub l_ce: f64,
    pub l_mse: f64,
    pub loss: f64,
    pub per_class: Vec<ClassScores>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub predictions: Vec<usize>,
}

/// `2PR/(P+R)`; every zero denominator yields 0.
pub fn f1_score(tp: usize, fp: usize, fn_: usize) -> f64 {
    let ratio = |a: usize, b: usize| if a + b == 0 { 0.0 } else { a as f64 / (a + b) as f64 };
    let p = ratio(tp, fp);
    let r = ratio(tp, fn_);
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn class_scores(confusion: &[Vec<usize>]) -> Vec<ClassScores> {
    let c = confusion.len();
    (0..c)
        .map(|k| {
            let tp = confusion[k][k];
            let support: usize = confusion[k].iter().sum();
            let predicted: usize = (0..c).map(|t| confusion[t][k]).sum();
            let (fp, fn_) = (predicted - tp, support - tp);
            let frac = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
            ClassScores {
                precision: frac(tp, predicted),
                recall: frac(tp, support),
                f1: f1_score(tp, fp, fn_),
                support,
            }
        })
        .collect()
}

/// Forward every sample and summarize losses, accuracy and per-class scores.
pub fn evaluate<X: Executor>(
    model: &HybridModel,
    params: &ParamSet,
    samples: &[LabeledImage],
    exec: &X,
) -> Result<EvalReport, ModelError> {
    if samples.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    model.check_params(params)?;
    let c = model.config().num_classes;
    let outs = exec.map_indexed(samples.len(), |i| -> Result<(f64, f64, usize), ModelError> {
        let s = &samples[i];
        let out = model.forward(&s.image, params)?;
        let ce = sample_cross_entropy(&out.probabilities, s.label)?;
        let mse = image_mse(&s.image, &out.reconstruction)?;
        Ok((ce, mse, argmax(&out.probabilities)))
    });
    let mut confusion = vec![vec![0usize; c]; c];
    let mut predictions = Vec::with_capacity(samples.len());
    let (mut ce, mut mse) = (0.0, 0.0);
    for (s, r) in samples.iter().zip(outs) {
        let (l, m, pred) = r?;
        ce += l;
        mse += m;
        confusion[s.label][pred] += 1;
        predictions.push(pred);
    }
    let n = samples.len() as f64;
    let correct: usize = (0..c).map(|k| confusion[k][k]).sum();
    let (l_ce, l_mse) = (ce / n, mse / n);
    Ok(EvalReport {
        accuracy: correct as f64 / n,
        l_ce,
        l_mse,
        loss: total_loss(l_ce, l_mse, model.config().effective_alpha()),
        per_class: class_scores(&confusion),
        confusion,
        predictions,
    })
}
