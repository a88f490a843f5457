use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::mlp::{backward, mse_loss, predict_batch, MlpParams, MlpSpec};
use crate::nn::optim::{adam_step, lr_at_epoch, AdamState, BatchSize, TrainConfig};
use crate::rng;

/// Paired inputs and targets, aligned by row.
#[derive(Debug, Clone, Copy)]
pub struct Supervised<'a> {
    pub inputs: &'a Matrix,
    pub targets: &'a Matrix,
}

impl<'a> Supervised<'a> {
    pub fn new(inputs: &'a Matrix, targets: &'a Matrix) -> Result<Self> {
        if inputs.rows() != targets.rows() {
            return Err(Error::DimensionMismatch {
                context: "inputs and targets sample count",
                expected: inputs.rows(),
                found: targets.rows(),
            });
        }
        Ok(Supervised { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Losses measured after the updates of one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    /// Zero-based epoch index within the run.
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    /// Snapshot with the lowest validation loss (training loss when no
    /// validation data was given).
    pub params: MlpParams,
    pub best_epoch: usize,
    /// Exactly one entry per epoch.
    pub history: Vec<EpochLoss>,
}

/// Trains `params` with Adam on the exponentially decaying schedule of `cfg`.
///
/// `on_epoch` sees the losses and the current (not best) parameters after
/// every epoch.
pub fn fit<F>(
    spec: &MlpSpec,
    mut params: MlpParams,
    train: Supervised<'_>,
    val: Option<Supervised<'_>>,
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<FitResult>
where
    F: FnMut(&EpochLoss, &MlpParams),
{
    cfg.validate()?;
    params.conforms_to(spec)?;
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let n = train.len();
    let batch = match cfg.batch_size {
        BatchSize::Samples(b) if b < n => Some(b),
        _ => None,
    };
    let mut shuffle_rng = rng::stream(cfg.seed, rng::streams::SHUFFLE);
    let mut order: Vec<usize> = (0..n).collect();
    let mut state = AdamState::new(&params);

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, MlpParams)> = None;

    for epoch in 0..cfg.epochs {
        let diverged = |detail| Error::Divergence {
            grade: 0,
            epoch,
            detail,
        };
        let lr = lr_at_epoch(cfg, epoch);
        match batch {
            None => {
                let (grads, _) = backward(spec, &params, train.inputs, train.targets)
                    .map_err(|e| relabel(e, epoch))?;
                adam_step(&mut params, &grads, &mut state, &cfg.adam, lr)
                    .map_err(|e| relabel(e, epoch))?;
            }
            Some(b) => {
                order.shuffle(&mut shuffle_rng);
                for chunk in order.chunks(b) {
                    let xb = train.inputs.select_rows(chunk);
                    let yb = train.targets.select_rows(chunk);
                    let (grads, _) =
                        backward(spec, &params, &xb, &yb).map_err(|e| relabel(e, epoch))?;
                    adam_step(&mut params, &grads, &mut state, &cfg.adam, lr)
                        .map_err(|e| relabel(e, epoch))?;
                }
            }
        }

        let train_loss = mse_loss(&predict_batch(spec, &params, train.inputs)?, train.targets)?;
        if !train_loss.is_finite() {
            return Err(diverged("non-finite training loss"));
        }
        let val_loss = match val {
            Some(v) => {
                let l = mse_loss(&predict_batch(spec, &params, v.inputs)?, v.targets)?;
                if !l.is_finite() {
                    return Err(diverged("non-finite validation loss"));
                }
                Some(l)
            }
            None => None,
        };
        let record = EpochLoss {
            epoch,
            lr,
            train_loss,
            val_loss,
        };
        let score = val_loss.unwrap_or(train_loss);
        if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
            best = Some((score, epoch, params.clone()));
        }
        on_epoch(&record, &params);
        history.push(record);
    }

    let (_, best_epoch, params) = best.expect("at least one epoch ran");
    Ok(FitResult {
        params,
        best_epoch,
        history,
    })
}

fn relabel(e: Error, epoch: usize) -> Error {
    match e {
        Error::Divergence { grade, detail, .. } => Error::Divergence {
            grade,
            epoch,
            detail,
        },
        other => other,
    }
}
