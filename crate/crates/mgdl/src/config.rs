//! Flat TOML experiment configs.
//!
//! Every key is optional; missing keys take the values of
//! [`ExperimentConfig::default`], the desk-scale setting-1 run. Unknown keys
//! are rejected at parse time. Numeric fields are read as signed integers so
//! that out-of-range values reach [`ExperimentConfig::validate`] and are
//! reported together instead of failing one at a time.

use std::fmt;
use std::path::Path;

use mgdl_core::nn::BatchSize;
use serde::{Deserialize, Serialize};

use crate::error::RunError;

/// Experiment family, parsed from the `task` key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// `synthetic-1` to `synthetic-4`.
    Synthetic(u8),
    /// `manifold-1` or `manifold-2`.
    Manifold(u8),
    Image,
    Mnist,
}

impl Task {
    pub fn parse(s: &str) -> Option<Task> {
        match s {
            "image" => return Some(Task::Image),
            "mnist" => return Some(Task::Mnist),
            _ => {}
        }
        let (family, setting) = s.rsplit_once('-')?;
        let setting: u8 = setting.parse().ok()?;
        match family {
            "synthetic" if (1..=4).contains(&setting) => Some(Task::Synthetic(setting)),
            "manifold" if (1..=2).contains(&setting) => Some(Task::Manifold(setting)),
            _ => None,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Synthetic(s) => write!(f, "synthetic-{s}"),
            Task::Manifold(s) => write!(f, "manifold-{s}"),
            Task::Image => f.write_str("image"),
            Task::Mnist => f.write_str("mnist"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Mgdl,
    Sgdl,
}

impl Method {
    pub fn parse(s: &str) -> Option<Method> {
        match s.to_ascii_lowercase().as_str() {
            "mgdl" => Some(Method::Mgdl),
            "sgdl" => Some(Method::Sgdl),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Mgdl => "mgdl",
            Method::Sgdl => "sgdl",
        }
    }
}

/// `batch_size = "full"` or a positive sample count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BatchSetting {
    Samples(i64),
    Named(String),
}

/// Value of `image` that selects the built-in test card instead of a file.
pub const BUILTIN_TEST_CARD: &str = "builtin:test-card";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `synthetic-1`..`synthetic-4`, `manifold-1`, `manifold-2`, `image` or `mnist`.
    pub task: String,
    /// `mgdl` or `sgdl`.
    pub method: String,

    /// Number of sine components `M` (synthetic and manifold tasks).
    pub components: i64,
    /// Frequencies are `frequency_step · j`.
    pub frequency_step: f64,
    pub phase_seed: i64,
    /// Petal count of the manifold curve.
    pub q: i64,

    /// Binary PPM path, or [`BUILTIN_TEST_CARD`].
    pub image: Option<String>,
    pub image_stride: i64,

    /// Directory holding the four standard MNIST IDX files.
    pub mnist_dir: Option<String>,
    pub beta: f64,
    pub kappa: f64,

    pub n_train: i64,
    pub n_val: i64,
    pub n_test: i64,
    pub val_seed: i64,
    pub test_seed: i64,
    pub split_seed: i64,

    /// Grade count; the SGDL network has `grades · hidden_per_grade` hidden layers.
    pub grades: i64,
    pub hidden_width: i64,
    pub hidden_per_grade: i64,
    /// Epochs per grade.
    pub epochs: i64,
    /// SGDL epochs; defaults to `epochs`.
    pub sgdl_epochs: Option<i64>,
    pub t_max: f64,
    pub t_min: f64,
    /// Per-grade overrides of `t_max` / `t_min`, one entry per grade.
    pub grade_t_max: Option<Vec<f64>>,
    pub grade_t_min: Option<Vec<f64>>,
    pub batch_size: BatchSetting,
    pub seed: i64,

    /// Periodic grid size for spectra; `0` disables spectrum output.
    pub spectrum_grid: i64,
    /// Epoch interval of evolution snapshots; `0` disables them.
    pub snapshot_every: i64,
    pub output_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: "synthetic-1".into(),
            method: "mgdl".into(),
            components: 5,
            frequency_step: 2.0,
            phase_seed: 0,
            q: 4,
            image: None,
            image_stride: 2,
            mnist_dir: None,
            beta: 1.0,
            kappa: 1.0,
            n_train: 256,
            n_val: 256,
            n_test: 256,
            val_seed: 0,
            test_seed: 1,
            split_seed: 0,
            grades: 3,
            hidden_width: 32,
            hidden_per_grade: 2,
            epochs: 2000,
            sgdl_epochs: None,
            t_max: 2e-3,
            t_min: 2e-4,
            grade_t_max: None,
            grade_t_min: None,
            batch_size: BatchSetting::Named("full".into()),
            seed: 0,
            spectrum_grid: 128,
            snapshot_every: 20,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|source| RunError::ConfigRead {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|source| RunError::ConfigParse {
            path: path.to_owned(),
            message: source.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config fields are all TOML-representable")
    }

    pub fn task_kind(&self) -> Option<Task> {
        Task::parse(&self.task)
    }

    pub fn method_kind(&self) -> Option<Method> {
        Method::parse(&self.method)
    }

    pub fn batch(&self) -> Option<BatchSize> {
        match &self.batch_size {
            BatchSetting::Named(s) if s.eq_ignore_ascii_case("full") => Some(BatchSize::Full),
            BatchSetting::Samples(n) if *n > 0 => Some(BatchSize::Samples(*n as usize)),
            _ => None,
        }
    }

    pub fn sgdl_epoch_count(&self) -> i64 {
        self.sgdl_epochs.unwrap_or(self.epochs)
    }

    /// Learning-rate bounds of grade `k` (zero based).
    pub fn grade_rates(&self, k: usize) -> (f64, f64) {
        let pick = |over: &Option<Vec<f64>>, base: f64| {
            over.as_ref().and_then(|v| v.get(k).copied()).unwrap_or(base)
        };
        (pick(&self.grade_t_max, self.t_max), pick(&self.grade_t_min, self.t_min))
    }

    /// Every violated invariant, in key order. Empty means runnable,
    /// apart from data files that are only checked when read.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let task = self.task_kind();
        if task.is_none() {
            v.push(format!(
                "task: unknown task {:?} (expected synthetic-1..4, manifold-1..2, image or mnist)",
                self.task
            ));
        }
        let method = self.method_kind();
        if method.is_none() {
            v.push(format!("method: expected \"mgdl\" or \"sgdl\", got {:?}", self.method));
        }

        let curve = matches!(task, Some(Task::Synthetic(_) | Task::Manifold(_)));
        if curve {
            if self.components < 1 {
                v.push(format!("components: must be at least 1, got {}", self.components));
            }
            if !(self.frequency_step > 0.0 && self.frequency_step.is_finite()) {
                v.push(format!("frequency_step: must be positive, got {}", self.frequency_step));
            }
            if self.phase_seed < 0 {
                v.push(format!("phase_seed: must be non-negative, got {}", self.phase_seed));
            }
        }
        if matches!(task, Some(Task::Manifold(_))) && self.q < 0 {
            v.push(format!("q: petal count must be non-negative, got {}", self.q));
        }
        if task == Some(Task::Image) {
            if self.image.is_none() {
                v.push("image: the image task needs an image path".into());
            }
            if self.image_stride < 1 {
                v.push(format!("image_stride: must be at least 1, got {}", self.image_stride));
            }
        }
        if task == Some(Task::Mnist) {
            if self.mnist_dir.is_none() {
                v.push("mnist_dir: the mnist task needs the IDX directory".into());
            }
            if !(self.beta >= 0.0 && self.beta.is_finite()) {
                v.push(format!("beta: must be non-negative, got {}", self.beta));
            }
            if !(self.kappa > 0.0 && self.kappa.is_finite()) {
                v.push(format!("kappa: must be positive, got {}", self.kappa));
            }
        }
        if task != Some(Task::Image) {
            for (key, n) in [("n_train", self.n_train), ("n_val", self.n_val), ("n_test", self.n_test)] {
                if n < 1 {
                    v.push(format!("{key}: must be at least 1, got {n}"));
                }
            }
        }
        for (key, s) in [
            ("val_seed", self.val_seed),
            ("test_seed", self.test_seed),
            ("split_seed", self.split_seed),
            ("seed", self.seed),
        ] {
            if s < 0 {
                v.push(format!("{key}: must be non-negative, got {s}"));
            }
        }

        if self.grades < 1 {
            v.push(format!("grades: at least one grade is required, got {}", self.grades));
        }
        if self.hidden_width < 1 {
            v.push(format!("hidden_width: must be at least 1, got {}", self.hidden_width));
        }
        if self.hidden_per_grade < 1 {
            v.push(format!(
                "hidden_per_grade: each grade needs at least one hidden layer, got {}",
                self.hidden_per_grade
            ));
        }
        if self.epochs < 1 {
            v.push(format!("epochs: must be at least 1, got {}", self.epochs));
        }
        if let Some(e) = self.sgdl_epochs {
            if e < 1 {
                v.push(format!("sgdl_epochs: must be at least 1, got {e}"));
            }
        }
        check_rates(&mut v, "t_max", "t_min", self.t_max, self.t_min);
        for (key, over) in [("grade_t_max", &self.grade_t_max), ("grade_t_min", &self.grade_t_min)] {
            if let Some(list) = over {
                if self.grades >= 1 && list.len() != self.grades as usize {
                    v.push(format!(
                        "{key}: expected {} entries (one per grade), got {}",
                        self.grades,
                        list.len()
                    ));
                }
            }
        }
        if self.grade_t_max.is_some() || self.grade_t_min.is_some() {
            let n = self.grades.max(0) as usize;
            for k in 0..n {
                let (hi, lo) = self.grade_rates(k);
                if (hi, lo) != (self.t_max, self.t_min) {
                    check_rates(
                        &mut v,
                        &format!("grade_t_max[{k}]"),
                        &format!("grade_t_min[{k}]"),
                        hi,
                        lo,
                    );
                }
            }
        }
        if self.batch().is_none() {
            v.push(format!(
                "batch_size: expected \"full\" or a positive integer, got {}",
                match &self.batch_size {
                    BatchSetting::Samples(n) => n.to_string(),
                    BatchSetting::Named(s) => format!("{s:?}"),
                }
            ));
        }
        if self.spectrum_grid < 0 || self.spectrum_grid == 1 {
            v.push(format!(
                "spectrum_grid: must be 0 (off) or at least 2, got {}",
                self.spectrum_grid
            ));
        }
        if self.snapshot_every < 0 {
            v.push(format!("snapshot_every: must be non-negative, got {}", self.snapshot_every));
        }
        if curve && self.spectrum_grid >= 2 && self.components >= 1 && self.frequency_step > 0.0 {
            let top = self.frequency_step * self.components as f64;
            let nyquist = (self.spectrum_grid / 2) as f64;
            if top > nyquist {
                v.push(format!(
                    "spectrum_grid: highest target frequency {top} exceeds the grid's Nyquist bin {nyquist}"
                ));
            }
        }
        v
    }
}

fn check_rates(v: &mut Vec<String>, hi_key: &str, lo_key: &str, hi: f64, lo: f64) {
    if !(lo > 0.0 && lo.is_finite()) {
        v.push(format!("{lo_key}: must be positive, got {lo}"));
    }
    if !(hi > 0.0 && hi.is_finite()) {
        v.push(format!("{hi_key}: must be positive, got {hi}"));
    }
    if lo > hi {
        v.push(format!("{lo_key}: {lo} exceeds {hi_key} {hi}"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        assert_eq!(ExperimentConfig::default().validate(), Vec::<String>::new());
    }

    #[test]
    fn empty_document_is_the_default() {
        assert_eq!(ExperimentConfig::from_toml_str("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn zero_grades_is_one_violation() {
        let cfg = ExperimentConfig {
            grades: 0,
            ..Default::default()
        };
        let v = cfg.validate();
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].starts_with("grades:"));
    }

    #[test]
    fn negative_q_is_one_violation() {
        let cfg = ExperimentConfig {
            task: "manifold-1".into(),
            q: -1,
            ..Default::default()
        };
        let v = cfg.validate();
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].starts_with("q:"));
    }

    #[test]
    fn inverted_rates_are_rejected() {
        let cfg = ExperimentConfig {
            t_max: 1e-4,
            t_min: 1e-3,
            ..Default::default()
        };
        let v = cfg.validate();
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].starts_with("t_min:"));
    }

    #[test]
    fn unknown_key_is_a_parse_error() {
        let err = ExperimentConfig::from_toml_str("epoch = 3\n").unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn every_violation_is_listed() {
        let cfg = ExperimentConfig {
            task: "synthetic-9".into(),
            method: "deep".into(),
            epochs: 0,
            batch_size: BatchSetting::Samples(0),
            ..Default::default()
        };
        assert_eq!(cfg.validate().len(), 4);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig {
            image: Some("cat.ppm".into()),
            grade_t_max: Some(vec![1e-3, 1e-3, 5e-4]),
            batch_size: BatchSetting::Samples(256),
            ..Default::default()
        };
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn task_names() {
        for name in ["synthetic-1", "synthetic-4", "manifold-2", "image", "mnist"] {
            assert_eq!(Task::parse(name).unwrap().to_string(), name);
        }
        for bad in ["synthetic-0", "synthetic-5", "manifold-3", "images", "synthetic"] {
            assert!(Task::parse(bad).is_none(), "{bad}");
        }
    }
}
