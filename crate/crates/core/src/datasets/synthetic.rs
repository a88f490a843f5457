use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng as _;

use super::{DatasetSplit, Provenance, SplitSeeds, SplitSizes, Table};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

/// Amplitude `α_j` of the `j`-th component (`j` is one based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmplitudeRule {
    /// `α_j = value`
    Constant(f64),
    /// `α_j = intercept − step·j`
    Decreasing { intercept: f64, step: f64 },
    /// `α_j(x) = e^{−x} cos(jx)`
    XVarying,
    /// `α_j = step·j`
    Increasing { step: f64 },
}

impl AmplitudeRule {
    pub fn amplitude(&self, j: usize, x: f64) -> f64 {
        let jf = j as f64;
        match *self {
            AmplitudeRule::Constant(v) => v,
            AmplitudeRule::Decreasing { intercept, step } => intercept - step * jf,
            AmplitudeRule::XVarying => libm::exp(-x) * libm::cos(jf * x),
            AmplitudeRule::Increasing { step } => step * jf,
        }
    }

    pub fn is_x_varying(&self) -> bool {
        matches!(self, AmplitudeRule::XVarying)
    }
}

/// `λ(x) = Σ_j α_j sin(2π κ_j x + φ_j)` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub amplitude: AmplitudeRule,
    pub frequencies: Vec<f64>,
    pub phases: Vec<f64>,
    pub phase_seed: u64,
}

impl SyntheticSpec {
    /// `m` components with `κ_j = 10j` and phases drawn uniformly on
    /// `[0, 2π)` from `phase_seed`.
    pub fn new(m: usize, amplitude: AmplitudeRule, phase_seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidConfig("at least one component is required".into()));
        }
        let mut rng = rng::stream(phase_seed, rng::streams::PHASES);
        let phases = (0..m).map(|_| rng.gen::<f64>() * 2.0 * PI).collect();
        Ok(SyntheticSpec {
            amplitude,
            frequencies: (1..=m).map(|j| 10.0 * j as f64).collect(),
            phases,
            phase_seed,
        })
    }

    /// Amplitude rule of the four one-dimensional settings (1 to 4).
    pub fn setting_rule(setting: u8) -> Result<AmplitudeRule> {
        Ok(match setting {
            1 => AmplitudeRule::Constant(1.0),
            2 => AmplitudeRule::Decreasing {
                intercept: 1.05,
                step: 0.05,
            },
            3 => AmplitudeRule::XVarying,
            4 => AmplitudeRule::Increasing { step: 0.05 },
            other => {
                return Err(Error::InvalidConfig(format!(
                    "synthetic setting must be 1 to 4, got {other}"
                )))
            }
        })
    }

    /// Replaces the frequencies by `κ_j = step·j`.
    pub fn with_frequency_step(mut self, step: f64) -> Self {
        self.frequencies = (1..=self.len()).map(|j| step * j as f64).collect();
        self
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// `α_j` at `x` for one-based `j`.
    pub fn alpha(&self, j: usize, x: f64) -> f64 {
        self.amplitude.amplitude(j, x)
    }
}

pub fn eval_lambda(spec: &SyntheticSpec, x: f64) -> f64 {
    spec.frequencies
        .iter()
        .zip(&spec.phases)
        .enumerate()
        .map(|(i, (&k, &phi))| spec.alpha(i + 1, x) * libm::sin(2.0 * PI * k * x + phi))
        .sum()
}

/// `n` equally spaced points on `[0, 1]`, both endpoints included.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// Periodic sampling grid `ℓ/n`, `ℓ = 0..n`, used for spectra.
pub fn spectrum_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / n as f64).collect()
}

pub(super) fn uniform_draws(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, rng::streams::SAMPLES);
    (0..n).map(|_| rng.gen::<f64>()).collect()
}

pub(super) fn split_provenance(generator: String, spec: &SyntheticSpec, seeds: SplitSeeds) -> Provenance {
    Provenance {
        generator,
        seeds: vec![
            ("phase", spec.phase_seed),
            ("validation", seeds.val),
            ("test", seeds.test),
        ],
        phases: spec.phases.clone(),
    }
}

/// Training inputs on the inclusive uniform grid; validation and test
/// inputs drawn uniformly on `[0, 1)` from their seeds.
pub fn build_synthetic_split(
    spec: &SyntheticSpec,
    sizes: SplitSizes,
    seeds: SplitSeeds,
) -> Result<DatasetSplit> {
    sizes.validate()?;
    let table = |xs: Vec<f64>| -> Result<Table> {
        let ys = xs.iter().map(|&x| eval_lambda(spec, x)).collect();
        Table::new(Matrix::column(xs)?, Matrix::column(ys)?)
    };
    Ok(DatasetSplit {
        train: table(uniform_grid(sizes.train))?,
        validation: table(uniform_draws(sizes.val, seeds.val))?,
        test: table(uniform_draws(sizes.test, seeds.test))?,
        provenance: split_provenance(String::from("synthetic"), spec, seeds),
    })
}
