use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::synthetic::{eval_lambda, split_provenance, uniform_draws, uniform_grid};
use super::{AmplitudeRule, DatasetSplit, SplitSeeds, SplitSizes, SyntheticSpec, Table};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Target `λ` read through the flower curve `γ_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSpec {
    /// Petal count; `0` gives the unit circle.
    pub q: u32,
    pub target: SyntheticSpec,
}

impl ManifoldSpec {
    /// Amplitude rule of manifold setting 1 (`α_j = 0.025j`) or 2 (`α_j(x) = e^{−x} cos(jx)`).
    pub fn setting_rule(setting: u8) -> Result<AmplitudeRule> {
        match setting {
            1 => Ok(AmplitudeRule::Increasing { step: 0.025 }),
            2 => Ok(AmplitudeRule::XVarying),
            other => Err(Error::InvalidConfig(format!(
                "manifold setting must be 1 or 2, got {other}"
            ))),
        }
    }
}

/// `γ_q(x) = [1 + sin(2πqx)/2] (cos 2πx, sin 2πx)`.
pub fn eval_gamma(q: u32, x: f64) -> [f64; 2] {
    let radius = 1.0 + libm::sin(2.0 * PI * q as f64 * x) / 2.0;
    let angle = 2.0 * PI * x;
    [radius * libm::cos(angle), radius * libm::sin(angle)]
}

fn embed(q: u32, xs: &[f64]) -> Result<Matrix> {
    let mut data = Vec::with_capacity(2 * xs.len());
    for &x in xs {
        data.extend_from_slice(&eval_gamma(q, x));
    }
    Matrix::new(xs.len(), 2, data)
}

/// Inputs `γ_q(x_ℓ)` and targets `λ(x_ℓ)`; the abscissae follow the same
/// grid / uniform-draw protocol as the one-dimensional split. Amplitudes
/// that depend on `x` are evaluated at the pre-image `x_ℓ`.
pub fn build_manifold_split(
    spec: &ManifoldSpec,
    sizes: SplitSizes,
    seeds: SplitSeeds,
) -> Result<DatasetSplit> {
    sizes.validate()?;
    let table = |xs: Vec<f64>| -> Result<Table> {
        let ys = xs.iter().map(|&x| eval_lambda(&spec.target, x)).collect();
        Table::new(embed(spec.q, &xs)?, Matrix::column(ys)?)
    };
    Ok(DatasetSplit {
        train: table(uniform_grid(sizes.train))?,
        validation: table(uniform_draws(sizes.val, seeds.val))?,
        test: table(uniform_draws(sizes.test, seeds.test))?,
        provenance: split_provenance(format!("manifold(q={})", spec.q), &spec.target, seeds),
    })
}

/// Probe inputs `γ_q(ℓ/n)` for the periodic spectrum grid.
pub fn manifold_probe(q: u32, grid: &[f64]) -> Result<Matrix> {
    embed(q, grid)
}
