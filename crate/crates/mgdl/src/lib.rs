//! Experiment runner around [`mgdl_core`]: TOML configs and presets,
//! data-file ingestion, artifact writing and the `mgdl` command line.

pub mod config;
pub mod error;
pub mod io;
pub mod presets;
pub mod report;
pub mod runner;
pub mod testcard;

pub use config::{ExperimentConfig, Method, Task};
pub use error::RunError;
pub use report::Metrics;
