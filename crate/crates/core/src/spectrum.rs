//! One-sided amplitude spectra, spectrum-evolution matrices and the
//! Jacobi–Anger / Carson utilities.
//!
//! Samples are taken on the periodic grid `x_ℓ = ℓ/N`, `ℓ = 0..N`, so bin
//! `k` is exactly `k` cycles over `[0, 1]`. Amplitudes use the one-sided
//! convention `(1/N)|X_0|` at DC and `(2/N)|X_k|` above it, which reads a
//! unit-amplitude sine as 1.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::datasets::{eval_lambda, spectrum_grid, SyntheticSpec};
use crate::error::{Error, Result};

/// Amplitudes at bins `0..=N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSeries {
    /// Cycles per unit interval.
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Number of samples the spectrum was computed from.
    pub samples: usize,
}

impl SpectrumSeries {
    /// `Σ_ℓ f(x_ℓ)²` recovered from the one-sided amplitudes.
    ///
    /// Bins strictly between DC and Nyquist stand for two conjugate bins of
    /// the full DFT; DC and (for even `N`) the Nyquist bin stand for one.
    pub fn parseval_energy(&self) -> f64 {
        let n = self.samples as f64;
        let mut two_sided = 0.0;
        for (k, &a) in self.amplitudes.iter().enumerate() {
            let energy = if k == 0 {
                let m = n * a;
                m * m
            } else {
                let m = n * a / 2.0;
                if 2 * k == self.samples {
                    m * m
                } else {
                    2.0 * m * m
                }
            };
            two_sided += energy;
        }
        two_sided / n
    }
}

/// `cos(2πm/N)` and `sin(2πm/N)` for `m = 0..N`.
struct Twiddles {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Twiddles {
    fn new(n: usize) -> Self {
        let (cos, sin) = (0..n)
            .map(|m| {
                let t = 2.0 * PI * m as f64 / n as f64;
                (libm::cos(t), libm::sin(t))
            })
            .unzip();
        Twiddles { cos, sin }
    }

    /// `|Σ_ℓ f_ℓ e^{−i2πkℓ/N}|`
    fn magnitude(&self, samples: &[f64], k: usize) -> f64 {
        let n = samples.len();
        let (mut re, mut im) = (0.0, 0.0);
        let mut idx = 0usize;
        for &f in samples {
            re += f * self.cos[idx];
            im -= f * self.sin[idx];
            idx += k;
            if idx >= n {
                idx -= n;
            }
        }
        libm::hypot(re, im)
    }
}

fn check_len(samples: &[f64]) -> Result<()> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a spectrum needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    Ok(())
}

fn scale(n: usize, k: usize) -> f64 {
    if k == 0 {
        1.0 / n as f64
    } else {
        2.0 / n as f64
    }
}

/// Direct DFT of `samples` reduced to one-sided amplitudes.
pub fn one_side_spectrum(samples: &[f64]) -> Result<SpectrumSeries> {
    check_len(samples)?;
    let n = samples.len();
    let tw = Twiddles::new(n);
    let bins = n / 2 + 1;
    Ok(SpectrumSeries {
        frequencies: (0..bins).map(|k| k as f64).collect(),
        amplitudes: (0..bins).map(|k| scale(n, k) * tw.magnitude(samples, k)).collect(),
        samples: n,
    })
}

/// One-sided amplitude at the listed bins only.
pub fn amplitudes_at(samples: &[f64], bins: &[usize]) -> Result<Vec<f64>> {
    check_len(samples)?;
    let n = samples.len();
    let nyquist = n / 2;
    if let Some(&k) = bins.iter().find(|&&k| k > nyquist) {
        return Err(Error::AboveNyquist {
            frequency: k,
            nyquist,
        });
    }
    let tw = Twiddles::new(n);
    Ok(bins.iter().map(|&k| scale(n, k) * tw.magnitude(samples, k)).collect())
}

/// Share of `Σ amplitude²` carried by bins at or below `edge`.
pub fn band_energy_fraction(samples: &[f64], edge: f64) -> Result<f64> {
    let s = one_side_spectrum(samples)?;
    let total: f64 = s.amplitudes.iter().map(|a| a * a).sum();
    if total == 0.0 {
        return Err(Error::InvalidArgument("band energy of an all-zero signal".into()));
    }
    let inside: f64 = s
        .frequencies
        .iter()
        .zip(&s.amplitudes)
        .filter(|(f, _)| **f <= edge)
        .map(|(_, a)| a * a)
        .sum();
    Ok(inside / total)
}

/// Carson bandwidth `(ab + b)/(2π)` of `cos(a sin(bx))`.
pub fn carson_band_edge(a: f64, b: f64) -> f64 {
    (a * b + b) / (2.0 * PI)
}

/// Bessel function of the first kind `J_n(a)` from its ascending series
/// `Σ_m (−1)^m (a/2)^{2m+n} / (m! (m+n)!)`, summed until a term drops
/// below `1e-16` of the partial sum. Accurate for the moderate `|a| ≤ 10`
/// used here; cancellation grows with `|a|`.
pub fn bessel_j(n: i32, a: f64) -> f64 {
    let order = n.unsigned_abs();
    let half = a / 2.0;
    let mut term = 1.0;
    for i in 1..=order {
        term *= half / i as f64;
    }
    let mut sum = term;
    let q = -half * half;
    let mut m = 0u32;
    loop {
        m += 1;
        term *= q / (m as f64 * (m + order) as f64);
        sum += term;
        // terms grow while m < |a|/2; only test convergence past the peak
        if term == 0.0 || (m as f64 > half.abs() && libm::fabs(term) < 1e-16 * libm::fabs(sum)) {
            break;
        }
        if m > 500 {
            break;
        }
    }
    if n < 0 && order % 2 == 1 {
        -sum
    } else {
        sum
    }
}

/// `cos(a sin(bx))`
pub fn jacobi_anger_lhs(a: f64, b: f64, x: f64) -> f64 {
    libm::cos(a * libm::sin(b * x))
}

/// `Σ_{n=−n_max}^{n_max} J_n(a) cos(nbx)`
pub fn jacobi_anger_series(a: f64, b: f64, x: f64, n_max: u32) -> f64 {
    let n_max = n_max as i32;
    (-n_max..=n_max)
        .map(|n| bessel_j(n, a) * libm::cos(n as f64 * b * x))
        .sum()
}

/// Learned amplitude over target amplitude at each target frequency,
/// one row per recorded epoch, clipped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionMatrix {
    pub epochs: Vec<usize>,
    pub frequencies: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl EvolutionMatrix {
    /// For each frequency column, the first recorded epoch whose entry is
    /// at least `threshold`.
    pub fn first_epoch_reaching(&self, threshold: f64) -> Vec<Option<usize>> {
        (0..self.frequencies.len())
            .map(|j| {
                self.rows
                    .iter()
                    .zip(&self.epochs)
                    .find(|(row, _)| row[j] >= threshold)
                    .map(|(_, &e)| e)
            })
            .collect()
    }
}

/// Accumulates evolution rows from sampled snapshots of a learned function.
///
/// Constant amplitude rules normalize by `|α_j|`; for `x`-dependent
/// amplitudes the target's own measured amplitude at `κ_j` is used.
#[derive(Debug, Clone)]
pub struct EvolutionRecorder {
    grid: Vec<f64>,
    bins: Vec<usize>,
    reference: Vec<f64>,
    matrix: EvolutionMatrix,
}

impl EvolutionRecorder {
    pub fn new(target: &SyntheticSpec, grid_size: usize) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::InvalidArgument("evolution grid needs at least 2 points".into()));
        }
        let nyquist = grid_size / 2;
        let mut bins = Vec::with_capacity(target.len());
        for &k in &target.frequencies {
            let bin = libm::round(k);
            if bin != k || bin < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "target frequency {k} is not a non-negative integer"
                )));
            }
            let bin = bin as usize;
            if bin > nyquist {
                return Err(Error::AboveNyquist {
                    frequency: bin,
                    nyquist,
                });
            }
            bins.push(bin);
        }
        let grid = spectrum_grid(grid_size);
        let reference = if target.amplitude.is_x_varying() {
            let samples: Vec<f64> = grid.iter().map(|&x| eval_lambda(target, x)).collect();
            amplitudes_at(&samples, &bins)?
        } else {
            (1..=target.len()).map(|j| libm::fabs(target.alpha(j, 0.0))).collect()
        };
        Ok(EvolutionRecorder {
            grid,
            matrix: EvolutionMatrix {
                epochs: Vec::new(),
                frequencies: bins.clone(),
                rows: Vec::new(),
            },
            bins,
            reference,
        })
    }

    /// Abscissae at which snapshots must be sampled.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn push(&mut self, epoch: usize, samples: &[f64]) -> Result<()> {
        if samples.len() != self.grid.len() {
            return Err(Error::DimensionMismatch {
                context: "evolution snapshot samples",
                expected: self.grid.len(),
                found: samples.len(),
            });
        }
        let learned = amplitudes_at(samples, &self.bins)?;
        let row = learned
            .iter()
            .zip(&self.reference)
            .map(|(&l, &r)| {
                if r <= 1e-12 {
                    // nothing to learn at this frequency
                    1.0
                } else {
                    (l / r).clamp(0.0, 1.0)
                }
            })
            .collect();
        self.matrix.epochs.push(epoch);
        self.matrix.rows.push(row);
        Ok(())
    }

    pub fn finish(self) -> EvolutionMatrix {
        self.matrix
    }
}

/// Builds the evolution matrix from `(epoch, samples on the periodic grid)`
/// snapshots.
pub fn record_evolution(
    snapshots: &[(usize, Vec<f64>)],
    target: &SyntheticSpec,
    grid_size: usize,
) -> Result<EvolutionMatrix> {
    if snapshots.is_empty() {
        return Err(Error::Empty("evolution snapshots"));
    }
    let mut rec = EvolutionRecorder::new(target, grid_size)?;
    for (epoch, samples) in snapshots {
        rec.push(*epoch, samples)?;
    }
    Ok(rec.finish())
}
