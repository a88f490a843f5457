//! Relative squared error and PSNR.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Accuracy of one trained model on the three splits.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricReport {
    pub tr_rse: f64,
    pub va_rse: f64,
    pub te_rse: f64,
    /// `+∞` when the reconstruction is exact.
    pub tr_psnr: Option<f64>,
    pub te_psnr: Option<f64>,
}

/// `Σ‖ŷ − y‖² / Σ‖y‖²`
pub fn rse(preds: &Matrix, targets: &Matrix) -> Result<f64> {
    let diff = preds.sub(targets)?;
    let denom = targets.squared_norm();
    if denom == 0.0 {
        return Err(Error::ZeroTargets);
    }
    Ok(diff.squared_norm() / denom)
}

/// `10 log₁₀(n·255² / ‖v − v̂‖²)` with `n` the number of entries, both
/// rasters on the 0–255 scale. Identical rasters give `+∞`.
pub fn psnr(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::DimensionMismatch {
            context: "PSNR raster size",
            expected: truth.len(),
            found: estimate.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Empty("PSNR raster"));
    }
    let err: f64 = truth
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * libm::log10(truth.len() as f64 * 255.0 * 255.0 / err))
}

/// PSNR of model outputs in `[0, 1]` against unit-scale targets. Outputs are
/// rescaled by 255 and clamped to `[0, 255]` first.
pub fn psnr_unit(targets: &Matrix, preds: &Matrix) -> Result<f64> {
    if targets.rows() != preds.rows() || targets.cols() != preds.cols() {
        return Err(Error::DimensionMismatch {
            context: "PSNR predictions",
            expected: targets.rows() * targets.cols(),
            found: preds.rows() * preds.cols(),
        });
    }
    let truth: alloc::vec::Vec<f64> = targets.as_slice().iter().map(|v| v * 255.0).collect();
    let est: alloc::vec::Vec<f64> = preds
        .as_slice()
        .iter()
        .map(|v| (v * 255.0).clamp(0.0, 255.0))
        .collect();
    psnr(&truth, &est)
}
