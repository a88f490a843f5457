use alloc::format;

use crate::error::{Error, Result};
use crate::nn::mlp::MlpParams;

/// Moment decay rates and denominator floor for Adam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Minibatch policy for one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSize {
    /// One update per epoch on every sample.
    Full,
    /// Shuffled minibatches of at most this many samples.
    Samples(usize),
}

/// Optimization schedule of one training run (a whole SGDL network, or one grade).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub t_max: f64,
    pub t_min: f64,
    pub epochs: usize,
    pub batch_size: BatchSize,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl TrainConfig {
    pub fn new(t_max: f64, t_min: f64, epochs: usize, batch_size: BatchSize, seed: u64) -> Result<Self> {
        let cfg = TrainConfig {
            t_max,
            t_min,
            epochs,
            batch_size,
            seed,
            adam: AdamConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min.is_finite() && self.t_max.is_finite()) || self.t_min <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "learning rates must be positive and finite (t_min = {}, t_max = {})",
                self.t_min, self.t_max
            )));
        }
        if self.t_min > self.t_max {
            return Err(Error::InvalidConfig(format!(
                "t_min ({}) must not exceed t_max ({})",
                self.t_min, self.t_max
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == BatchSize::Samples(0) {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        let a = &self.adam;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || a.eps <= 0.0 {
            return Err(Error::InvalidConfig("Adam betas must lie in [0, 1) and eps be positive".into()));
        }
        Ok(())
    }

    /// Decay rate `γ = ln(t_max / t_min) / K`.
    pub fn decay_rate(&self) -> f64 {
        libm::log(self.t_max / self.t_min) / self.epochs as f64
    }
}

/// Learning rate `t_max · exp(−γk)` for epoch `k ∈ [0, K]`.
pub fn lr_at_epoch(cfg: &TrainConfig, k: usize) -> f64 {
    if cfg.t_max == cfg.t_min {
        return cfg.t_max;
    }
    cfg.t_max * libm::exp(-cfg.decay_rate() * k as f64)
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first: MlpParams,
    pub second: MlpParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(like: &MlpParams) -> Self {
        let mut zero = like.clone();
        for s in zero.slices_mut() {
            s.fill(0.0);
        }
        AdamState {
            first: zero.clone(),
            second: zero,
            step: 0,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
///
/// On a non-finite update the step is abandoned with a divergence error;
/// parameters already written in that call are not rolled back.
pub fn adam_step(
    params: &mut MlpParams,
    grads: &MlpParams,
    state: &mut AdamState,
    cfg: &AdamConfig,
    lr: f64,
) -> Result<()> {
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - libm::pow(cfg.beta1, t);
    let bc2 = 1.0 - libm::pow(cfg.beta2, t);
    let step_size = lr / bc1;

    let slices = params
        .slices_mut()
        .zip(grads.slices())
        .zip(state.first.slices_mut().zip(state.second.slices_mut()));
    for ((p, g), (m, v)) in slices {
        if p.len() != g.len() || p.len() != m.len() || p.len() != v.len() {
            return Err(Error::DimensionMismatch {
                context: "Adam buffers",
                expected: p.len(),
                found: g.len(),
            });
        }
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let update = step_size * m[i] / (libm::sqrt(v[i] / bc2) + cfg.eps);
            let next = p[i] - update;
            if !next.is_finite() {
                return Err(Error::Divergence {
                    grade: 0,
                    epoch: 0,
                    detail: "non-finite Adam update",
                });
            }
            p[i] = next;
        }
    }
    Ok(())
}
