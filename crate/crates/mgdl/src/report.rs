//! metrics.json schema and the cross-run comparison table.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::config::ExperimentConfig;
use crate::error::RunError;

/// A PSNR value in dB. An exact reconstruction is `+∞`, written as the
/// string `"inf"` since JSON has no infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decibels(pub f64);

impl Serialize for Decibels {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for Decibels {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Decibels;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Decibels, E> {
                Ok(Decibels(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Decibels, E> {
                Ok(Decibels(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Decibels, E> {
                Ok(Decibels(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Decibels, E> {
                match v {
                    "inf" => Ok(Decibels(f64::INFINITY)),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Accuracy of the model composed from grades `1..=grade` (the whole
/// network for SGDL).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeMetrics {
    pub grade: usize,
    /// One-based epoch of the kept snapshot.
    pub best_epoch: usize,
    pub tr_rse: f64,
    pub va_rse: f64,
    pub te_rse: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tr_psnr: Option<Decibels>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub te_psnr: Option<Decibels>,
    pub train_residue_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub position: usize,
    pub before: f64,
    pub after: f64,
    pub function_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicSummary {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

/// Contents of metrics.json. Wall-clock times live in timing.json so that
/// this file is reproducible bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub task: String,
    pub method: String,
    pub seed: u64,
    pub tr_rse: f64,
    pub va_rse: f64,
    pub te_rse: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tr_psnr: Option<Decibels>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub te_psnr: Option<Decibels>,
    pub grades: Vec<GradeMetrics>,
    /// `‖y‖` followed by the training residual norm after each grade.
    pub residue_norms: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotonic: Option<MonotonicSummary>,
}

impl Metrics {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|source| RunError::MissingFile {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| RunError::BadData {
            path: path.to_owned(),
            detail: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeTiming {
    pub grade: usize,
    pub wall_time: f64,
}

/// Contents of timing.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub grades: Vec<GradeTiming>,
    pub total: f64,
}

/// Header of the comparison table written by `mgdl report`.
pub const REPORT_HEADER: [&str; 12] = [
    "run", "task", "method", "t_max", "t_min", "batch_size", "time_s", "tr_rse", "va_rse", "te_rse",
    "tr_psnr", "te_psnr",
];

/// One row per run directory (or metrics.json path). Learning rates and
/// batch size come from the run's config.toml, time from timing.json; a
/// missing companion file leaves those cells empty.
pub fn comparison_table(runs: &[PathBuf]) -> Result<Vec<Vec<String>>, RunError> {
    let mut rows = Vec::with_capacity(runs.len());
    for run in runs {
        let (dir, metrics_path) = if run.is_dir() {
            (run.clone(), run.join("metrics.json"))
        } else {
            (run.parent().map(Path::to_owned).unwrap_or_default(), run.clone())
        };
        let m = Metrics::read(&metrics_path)?;
        let cfg = ExperimentConfig::load(&dir.join("config.toml")).ok();
        let timing: Option<Timing> = std::fs::read_to_string(dir.join("timing.json"))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok());
        let opt = |v: Option<String>| v.unwrap_or_default();
        let db = |d: Option<Decibels>| opt(d.map(|d| d.0.to_string()));
        rows.push(vec![
            dir.display().to_string(),
            m.task.clone(),
            m.method.clone(),
            opt(cfg.as_ref().map(|c| c.t_max.to_string())),
            opt(cfg.as_ref().map(|c| c.t_min.to_string())),
            opt(cfg.as_ref().map(|c| match &c.batch_size {
                crate::config::BatchSetting::Samples(n) => n.to_string(),
                crate::config::BatchSetting::Named(s) => s.clone(),
            })),
            opt(timing.map(|t| format!("{:.3}", t.total))),
            m.tr_rse.to_string(),
            m.va_rse.to_string(),
            m.te_rse.to_string(),
            db(m.tr_psnr),
            db(m.te_psnr),
        ]);
    }
    Ok(rows)
}
