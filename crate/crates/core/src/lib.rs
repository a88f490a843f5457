//! Multi-grade training of shallow ReLU networks.
//!
//! A target is learned grade by grade: each grade fits a small network to
//! the residue left by the previous grades, reading the frozen hidden
//! stacks of those grades as its input features, and the final predictor
//! is the sum of every grade's output. The crate also carries the
//! single-network baseline, the regression task generators, one-sided
//! amplitude spectra and the accuracy metrics used to compare the two.
//!
//! The crate is `no_std` (it needs `alloc`). File IO, configuration and
//! the command line live in the `mgdl` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod datasets;
pub mod error;
pub mod formats;
pub mod grade;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod spectrum;

pub use error::{Error, IdxError, PpmError, Result};
pub use linalg::Matrix;
