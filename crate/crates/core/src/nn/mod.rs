//! Shallow ReLU networks: forward and reverse passes, initialization,
//! the Adam optimizer and the exponential learning-rate schedule.

mod mlp;
mod optim;
mod train;

pub use mlp::{
    backward, forward, forward_batch, hidden_features, mse_loss, predict_batch, xavier_init,
    BatchTrace, ForwardTrace, MlpParams, MlpSpec,
};
pub use optim::{adam_step, lr_at_epoch, AdamConfig, AdamState, BatchSize, TrainConfig};
pub use train::{fit, EpochLoss, FitResult, Supervised};
