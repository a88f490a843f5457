//! Generators for the regression task families and the split containers
//! they produce.

mod image;
mod manifold;
mod mnist;
mod synthetic;

pub use image::{build_image_split, pixel_coordinates, raster_from_predictions};
pub use manifold::{build_manifold_split, eval_gamma, manifold_probe, ManifoldSpec};
pub use mnist::{build_mnist_split, MnistTargetSpec, MNIST_CLASSES};
pub use synthetic::{
    build_synthetic_split, eval_lambda, spectrum_grid, uniform_grid, AmplitudeRule, SyntheticSpec,
};

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::Supervised;

/// Row-aligned inputs and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub inputs: Matrix,
    pub targets: Matrix,
}

impl Table {
    pub fn new(inputs: Matrix, targets: Matrix) -> Result<Self> {
        if inputs.rows() != targets.rows() {
            return Err(Error::DimensionMismatch {
                context: "table inputs vs targets",
                expected: inputs.rows(),
                found: targets.rows(),
            });
        }
        Ok(Table { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn supervised(&self) -> Supervised<'_> {
        Supervised {
            inputs: &self.inputs,
            targets: &self.targets,
        }
    }
}

/// How a split was generated.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub generator: String,
    pub seeds: Vec<(&'static str, u64)>,
    /// Phases drawn for synthetic targets, recorded for auditability.
    pub phases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Table,
    pub validation: Table,
    pub test: Table,
    pub provenance: Provenance,
}

/// Sample counts of the three splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitSizes {
    pub const SYNTHETIC: SplitSizes = SplitSizes {
        train: 6000,
        val: 2000,
        test: 2000,
    };
    pub const MANIFOLD: SplitSizes = SplitSizes {
        train: 12000,
        val: 4000,
        test: 4000,
    };

    fn validate(&self) -> Result<()> {
        if self.train == 0 || self.val == 0 || self.test == 0 {
            return Err(Error::InvalidConfig("split sizes must be at least 1".into()));
        }
        Ok(())
    }
}

/// Seeds of the uniformly drawn validation and test abscissae.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSeeds {
    pub val: u64,
    pub test: u64,
}

impl Default for SplitSeeds {
    fn default() -> Self {
        SplitSeeds { val: 0, test: 1 }
    }
}
