use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;

use super::{DatasetSplit, Provenance, Table};
use crate::error::{Error, Result};
use crate::formats::IdxTensor;
use crate::linalg::Matrix;
use crate::rng;

pub const MNIST_CLASSES: usize = 10;

/// Radial-wave perturbation `τ(x) = τ_0(x) (1 + β sin(2πκ‖x‖₂))` of the
/// one-hot digit labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MnistTargetSpec {
    pub beta: f64,
    pub kappa: f64,
    pub n_train: usize,
    pub n_val: usize,
}

impl MnistTargetSpec {
    pub fn new(beta: f64, kappa: f64) -> Result<Self> {
        let spec = MnistTargetSpec {
            beta,
            kappa,
            n_train: 45_000,
            n_val: 15_000,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidConfig(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if self.n_train == 0 || self.n_val == 0 {
            return Err(Error::InvalidConfig("MNIST split sizes must be positive".into()));
        }
        Ok(())
    }

    /// Perturbation factor `1 + β ψ_κ(x)` for pixels already scaled to `[0, 1]`.
    pub fn wave_factor(&self, pixels: &[f64]) -> f64 {
        let norm = libm::sqrt(pixels.iter().map(|p| p * p).sum::<f64>());
        1.0 + self.beta * libm::sin(2.0 * PI * self.kappa * norm)
    }
}

fn check_pair(images: &IdxTensor, labels: &IdxTensor, which: &'static str) -> Result<()> {
    if labels.dims.len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "{which} labels must be one-dimensional, got {} dims",
            labels.dims.len()
        )));
    }
    if images.dims.len() < 2 {
        return Err(Error::InvalidArgument(format!("{which} images need an item dimension")));
    }
    if images.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "image count vs label count",
            expected: images.len(),
            found: labels.len(),
        });
    }
    if let Some(&bad) = labels.data.iter().find(|&&l| l as usize >= MNIST_CLASSES) {
        return Err(Error::InvalidArgument(format!("{which} label {bad} is not a digit")));
    }
    Ok(())
}

fn build_table(
    images: &IdxTensor,
    labels: &IdxTensor,
    indices: &[usize],
    wave: Option<&MnistTargetSpec>,
) -> Result<Table> {
    let dim = images.item_size();
    let mut inputs = Vec::with_capacity(indices.len() * dim);
    let mut targets = Vec::with_capacity(indices.len() * MNIST_CLASSES);
    for &i in indices {
        let start = inputs.len();
        inputs.extend(images.item(i).iter().map(|&p| p as f64 / 255.0));
        let factor = wave.map_or(1.0, |w| w.wave_factor(&inputs[start..]));
        let mut onehot = [0.0; MNIST_CLASSES];
        onehot[labels.data[i] as usize] = factor;
        targets.extend_from_slice(&onehot);
    }
    Table::new(
        Matrix::new(indices.len(), dim, inputs)?,
        Matrix::new(indices.len(), MNIST_CLASSES, targets)?,
    )
}

/// Splits the training pool into training and validation sets by a seeded
/// shuffle, perturbs their targets with the radial wave, and keeps the test
/// targets clean one-hot vectors.
pub fn build_mnist_split(
    train_images: &IdxTensor,
    train_labels: &IdxTensor,
    test_images: &IdxTensor,
    test_labels: &IdxTensor,
    spec: &MnistTargetSpec,
    split_seed: u64,
) -> Result<DatasetSplit> {
    spec.validate()?;
    check_pair(train_images, train_labels, "training")?;
    check_pair(test_images, test_labels, "test")?;
    if test_images.item_size() != train_images.item_size() {
        return Err(Error::DimensionMismatch {
            context: "test image size",
            expected: train_images.item_size(),
            found: test_images.item_size(),
        });
    }
    if spec.n_train + spec.n_val != train_images.len() {
        return Err(Error::DimensionMismatch {
            context: "training pool size vs n_train + n_val",
            expected: spec.n_train + spec.n_val,
            found: train_images.len(),
        });
    }
    let mut order: Vec<usize> = (0..train_images.len()).collect();
    order.shuffle(&mut rng::stream(split_seed, rng::streams::SPLIT));
    let (train_idx, val_idx) = order.split_at(spec.n_train);
    let test_idx: Vec<usize> = (0..test_images.len()).collect();
    Ok(DatasetSplit {
        train: build_table(train_images, train_labels, train_idx, Some(spec))?,
        validation: build_table(train_images, train_labels, val_idx, Some(spec))?,
        test: build_table(test_images, test_labels, &test_idx, None)?,
        provenance: Provenance {
            generator: format!("mnist(beta={}, kappa={})", spec.beta, spec.kappa),
            seeds: alloc::vec![("split", split_seed)],
            phases: Vec::new(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pool(n: usize, dim: usize) -> (IdxTensor, IdxTensor) {
        let images = IdxTensor {
            dims: vec![n, dim],
            data: (0..n * dim).map(|i| (i * 37 % 256) as u8).collect(),
        };
        let labels = IdxTensor {
            dims: vec![n],
            data: (0..n).map(|i| (i % 10) as u8).collect(),
        };
        (images, labels)
    }

    fn spec(beta: f64, kappa: f64, n_train: usize, n_val: usize) -> MnistTargetSpec {
        MnistTargetSpec {
            beta,
            kappa,
            n_train,
            n_val,
        }
    }

    #[test]
    fn zero_beta_gives_one_hot() {
        let (xi, xl) = pool(20, 4);
        let (ti, tl) = pool(5, 4);
        let s = build_mnist_split(&xi, &xl, &ti, &tl, &spec(0.0, 3.0, 15, 5), 0).unwrap();
        for row in s.train.targets.iter_rows().chain(s.validation.targets.iter_rows()) {
            assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(row.iter().filter(|&&v| v == 0.0).count(), 9);
        }
    }

    #[test]
    fn zero_image_is_unperturbed() {
        let w = spec(2.0, 5.0, 1, 1);
        assert_eq!(w.wave_factor(&[0.0; 784]), 1.0);
    }

    #[test]
    fn quarter_wave_doubles_target() {
        // 2πκ‖x‖ = π/2 with ‖x‖ = 1 and κ = 1/4
        let images = IdxTensor {
            dims: vec![1, 1],
            data: vec![255],
        };
        let labels = IdxTensor {
            dims: vec![1],
            data: vec![7],
        };
        let w = spec(1.0, 0.25, 1, 0);
        let t = build_table(&images, &labels, &[0], Some(&w)).unwrap();
        let mut expected = [0.0; 10];
        expected[7] = 2.0;
        assert_eq!(t.targets.row(0), &expected);
    }

    #[test]
    fn split_is_disjoint_and_exhaustive() {
        let (xi, xl) = pool(30, 3);
        let (ti, tl) = pool(4, 3);
        let s = build_mnist_split(&xi, &xl, &ti, &tl, &spec(1.0, 1.0, 20, 10), 9).unwrap();
        let mut rows: Vec<Vec<u64>> = s
            .train
            .inputs
            .iter_rows()
            .chain(s.validation.inputs.iter_rows())
            .map(|r| r.iter().map(|v| v.to_bits()).collect())
            .collect();
        rows.sort();
        let mut pool_rows: Vec<Vec<u64>> = (0..30)
            .map(|i| xi.item(i).iter().map(|&p| (p as f64 / 255.0).to_bits()).collect())
            .collect();
        pool_rows.sort();
        assert_eq!(rows, pool_rows);
        // test targets are clean
        for row in s.test.targets.iter_rows() {
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
        let again = build_mnist_split(&xi, &xl, &ti, &tl, &spec(1.0, 1.0, 20, 10), 9).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn count_mismatch_rejected() {
        let (xi, _) = pool(10, 3);
        let (_, short_labels) = pool(9, 3);
        let (ti, tl) = pool(2, 3);
        assert!(matches!(
            build_mnist_split(&xi, &short_labels, &ti, &tl, &spec(1.0, 1.0, 5, 5), 0),
            Err(Error::DimensionMismatch { .. })
        ));
        let (xl_ok, xl) = pool(10, 3);
        assert!(build_mnist_split(&xl_ok, &xl, &ti, &tl, &spec(1.0, 1.0, 5, 4), 0).is_err());
        assert!(MnistTargetSpec::new(-1.0, 1.0).is_err());
        assert!(MnistTargetSpec::new(1.0, 0.0).is_err());
    }
}
