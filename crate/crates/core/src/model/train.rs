use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{adam_step, evaluate, total_loss, HybridModel, LabeledImage, ModelError, ParameterStore};
use crate::exec::Executor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub l_ce: f64,
    pub l_mse: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    pub l_ce: f64,
    pub l_mse: f64,
    pub loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    /// Parameters at the epoch with the lowest validation loss.
    pub best: ParameterStore,
    /// 0 when no epoch completed.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub history: Vec<EpochMetrics>,
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("run {run} diverged at optimizer step {step}: {cause}")]
    Diverged { run: usize, step: u64, cause: ModelError, partial: Box<RunResult> },
}

impl TrainError {
    pub fn partial(&self) -> Option<&RunResult> {
        match self {
            TrainError::Diverged { partial, .. } => Some(partial),
            TrainError::Model(_) => None,
        }
    }
}

fn is_divergence(e: &ModelError) -> bool {
    matches!(e, ModelError::NonFiniteLoss | ModelError::NonFiniteGradient)
}

/// One seeded run: per-epoch shuffled minibatch Adam with best-validation
/// checkpoint retention. Parameters are seeded with `seed + run`.
pub fn train_run<X: Executor>(
    model: &HybridModel,
    train: &[LabeledImage],
    validation: &[LabeledImage],
    run: usize,
    exec: &X,
) -> Result<RunResult, TrainError> {
    if train.is_empty() || validation.is_empty() {
        return Err(ModelError::EmptyDataset.into());
    }
    let cfg = model.config();
    let alpha = cfg.effective_alpha();
    let seed = cfg.seed.wrapping_add(run as u64);
    let mut store = model.init_params(seed);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seed);
    shuffle_rng.set_stream(1);

    let mut result = RunResult {
        run,
        seed,
        best: store.clone(),
        best_epoch: 0,
        best_val_loss: f64::INFINITY,
        history: Vec::new(),
        steps: Vec::new(),
    };
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let (mut ce, mut mse, mut correct) = (0.0, 0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let outcome = model
                .batch_gradient(train, batch, &store.params, exec)
                .and_then(|g| adam_step(&mut store, &g.grads, cfg.learning_rate).map(|_| g));
            let g = match outcome {
                Ok(g) => g,
                Err(cause) if is_divergence(&cause) => {
                    let step = store.step + 1;
                    return Err(TrainError::Diverged { run, step, cause, partial: Box::new(result) });
                }
                Err(e) => return Err(e.into()),
            };
            result.steps.push(StepRecord { step: store.step, l_ce: g.l_ce, l_mse: g.l_mse, loss: g.loss });
            let b = batch.len() as f64;
            ce += g.l_ce * b;
            mse += g.l_mse * b;
            correct += g.correct;
        }
        let n = train.len() as f64;
        let (l_ce, l_mse) = (ce / n, mse / n);
        let val = evaluate(model, &store.params, validation, exec)?;
        if !val.loss.is_finite() {
            let step = store.step;
            return Err(TrainError::Diverged {
                run,
                step,
                cause: ModelError::NonFiniteLoss,
                partial: Box::new(result),
            });
        }
        result.history.push(EpochMetrics {
            epoch,
            l_ce,
            l_mse,
            loss: total_loss(l_ce, l_mse, alpha),
            train_acc: correct as f64 / n,
            val_loss: val.loss,
            val_acc: val.accuracy,
        });
        if val.loss < result.best_val_loss {
            result.best_val_loss = val.loss;
            result.best_epoch = epoch;
            result.best = store.clone();
        }
    }
    Ok(result)
}

/// All configured runs, in order.
pub fn train<X: Executor>(
    model: &HybridModel,
    train: &[LabeledImage],
    validation: &[LabeledImage],
    exec: &X,
) -> Result<Vec<RunResult>, TrainError> {
    (0..model.config().runs).map(|run| train_run(model, train, validation, run, exec)).collect()
}
