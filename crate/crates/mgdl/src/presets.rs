//! Named configs. `desk-*` presets finish in seconds to minutes on one
//! core; `full-*` presets use the full network sizes and epoch counts and
//! take hours to days.

use crate::config::{BatchSetting, ExperimentConfig, Method, BUILTIN_TEST_CARD};

/// Preset names with a one-line description each.
pub const PRESETS: &[(&str, &str)] = &[
    ("desk-synthetic-1", "constant amplitudes, M=5, 3 grades x [32]x2, 2000 epochs"),
    ("desk-synthetic-2", "decreasing amplitudes, M=5, 3 grades x [32]x2, 2000 epochs"),
    ("desk-synthetic-3", "x-varying amplitudes, M=5, 3 grades x [32]x2, 2000 epochs"),
    ("desk-synthetic-4", "increasing amplitudes, M=5, 3 grades x [32]x2, 2000 epochs"),
    ("desk-manifold-1", "manifold q=4, increasing amplitudes, 3 grades x [32]x2"),
    ("desk-manifold-2", "manifold q=4, x-varying amplitudes, 3 grades x [32]x2"),
    ("desk-image", "64x64 built-in test card, 4 grades x [32]x3, fixed rate"),
    ("desk-mnist", "MNIST subset (2000/1000/1000), beta=1, kappa=1, 3 grades x [64]x2"),
    ("full-synthetic-1", "long-running: M=20, 4 grades x [256]x2, 30000 epochs"),
    ("full-synthetic-2", "long-running: M=20, 4 grades x [256]x2, 30000 epochs"),
    ("full-synthetic-3", "long-running: M=20, 4 grades x [256]x2, 30000 epochs"),
    ("full-synthetic-4", "long-running: M=20, 5 grades x [256]x2, 30000 epochs"),
    ("full-manifold-1", "long-running: M=40, q=4, 4 grades x [256]x2, 30000 epochs"),
    ("full-manifold-2", "long-running: M=40, q=4, 4 grades x [256]x2, 30000 epochs"),
    ("full-image", "long-running: needs `image`, 4 grades x [256]x3, 10000 epochs"),
    ("full-mnist", "long-running: needs `mnist_dir`, 3 grades x [128]x2, 2000 epochs"),
];

/// The preset `name` configured for `method`. Presets whose published
/// learning rates differ between methods pick the row for `method`.
pub fn preset(name: &str, method: Method) -> Option<ExperimentConfig> {
    let mut cfg = match name {
        "desk-synthetic-1" | "desk-synthetic-2" | "desk-synthetic-3" | "desk-synthetic-4" => {
            desk_curve(&name["desk-".len()..])
        }
        "desk-manifold-1" | "desk-manifold-2" => desk_curve(&name["desk-".len()..]),
        "desk-image" => ExperimentConfig {
            task: "image".into(),
            image: Some(BUILTIN_TEST_CARD.into()),
            grades: 4,
            hidden_width: 32,
            hidden_per_grade: 3,
            epochs: 500,
            t_max: 1e-3,
            t_min: 1e-3,
            spectrum_grid: 0,
            snapshot_every: 0,
            ..Default::default()
        },
        "desk-mnist" => ExperimentConfig {
            task: "mnist".into(),
            mnist_dir: Some("data/mnist".into()),
            n_train: 2000,
            n_val: 1000,
            n_test: 1000,
            grades: 3,
            hidden_width: 64,
            hidden_per_grade: 2,
            epochs: 200,
            t_max: 1e-3,
            t_min: 1e-4,
            spectrum_grid: 0,
            snapshot_every: 0,
            ..Default::default()
        },
        "full-synthetic-1" | "full-synthetic-2" | "full-synthetic-3" | "full-synthetic-4" => {
            full_synthetic(name.as_bytes()[name.len() - 1] - b'0', method)
        }
        "full-manifold-1" | "full-manifold-2" => {
            full_manifold(name.as_bytes()[name.len() - 1] - b'0', method)
        }
        "full-image" => {
            let mut c = ExperimentConfig {
                task: "image".into(),
                image: None,
                grades: 4,
                hidden_width: 256,
                hidden_per_grade: 3,
                epochs: 10_000,
                t_max: 5e-3,
                t_min: 5e-3,
                spectrum_grid: 0,
                snapshot_every: 0,
                ..Default::default()
            };
            if method == Method::Mgdl {
                c.t_max = 1e-3;
                c.t_min = 1e-3;
                c.grade_t_max = Some(vec![1e-3, 1e-3, 5e-4, 5e-4]);
                c.grade_t_min = Some(vec![1e-3, 1e-3, 5e-4, 5e-4]);
            }
            c
        }
        "full-mnist" => ExperimentConfig {
            task: "mnist".into(),
            mnist_dir: Some("data/mnist".into()),
            n_train: 45_000,
            n_val: 15_000,
            n_test: 10_000,
            grades: 3,
            hidden_width: 128,
            hidden_per_grade: 2,
            epochs: 2000,
            t_max: 1e-4,
            t_min: 1e-5,
            spectrum_grid: 0,
            snapshot_every: 0,
            ..Default::default()
        },
        _ => return None,
    };
    cfg.method = method.as_str().into();
    Some(cfg)
}

fn desk_curve(task: &str) -> ExperimentConfig {
    ExperimentConfig {
        task: task.into(),
        ..Default::default()
    }
}

fn full_synthetic(setting: u8, method: Method) -> ExperimentConfig {
    // (t_max, t_min, batch) per setting for MGDL and SGDL
    let (mgdl, sgdl) = match setting {
        1 => ((1e-4, 1e-4, 256), (1e-4, 1e-4, 256)),
        2 => ((1e-4, 1e-4, 256), (5e-4, 1e-4, 256)),
        3 => ((1e-4, 1e-4, 256), (1e-3, 1e-4, 256)),
        _ => ((1e-4, 1e-4, 0), (5e-5, 1e-5, 256)),
    };
    let (t_max, t_min, batch) = if method == Method::Mgdl { mgdl } else { sgdl };
    ExperimentConfig {
        task: format!("synthetic-{setting}"),
        components: 20,
        frequency_step: 10.0,
        n_train: 6000,
        n_val: 2000,
        n_test: 2000,
        grades: if setting == 4 { 5 } else { 4 },
        hidden_width: 256,
        hidden_per_grade: 2,
        epochs: 30_000,
        t_max,
        t_min,
        batch_size: batch_setting(batch),
        spectrum_grid: 512,
        snapshot_every: 100,
        ..Default::default()
    }
}

fn full_manifold(setting: u8, method: Method) -> ExperimentConfig {
    let (t_max, t_min, batch) = match (setting, method) {
        (1, Method::Mgdl) | (2, Method::Mgdl) => (1e-3, 1e-4, 0),
        (1, Method::Sgdl) => (1e-4, 1e-6, 1024),
        _ => (1e-3, 1e-6, 512),
    };
    ExperimentConfig {
        task: format!("manifold-{setting}"),
        components: 40,
        frequency_step: 10.0,
        q: 4,
        n_train: 12_000,
        n_val: 4000,
        n_test: 4000,
        grades: 4,
        hidden_width: 256,
        hidden_per_grade: 2,
        epochs: 30_000,
        t_max,
        t_min,
        batch_size: batch_setting(batch),
        spectrum_grid: 1024,
        snapshot_every: 100,
        ..Default::default()
    }
}

fn batch_setting(batch: i64) -> BatchSetting {
    if batch == 0 {
        BatchSetting::Named("full".into())
    } else {
        BatchSetting::Samples(batch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_preset_exists() {
        for (name, _) in PRESETS {
            for m in [Method::Mgdl, Method::Sgdl] {
                let cfg = preset(name, m).unwrap_or_else(|| panic!("{name}"));
                assert_eq!(cfg.method, m.as_str());
            }
        }
        assert!(preset("desk-synthetic-5", Method::Mgdl).is_none());
    }

    #[test]
    fn presets_validate_except_for_missing_data_paths() {
        for (name, _) in PRESETS {
            let v = preset(name, Method::Mgdl).unwrap().validate();
            if *name == "full-image" {
                assert_eq!(v.len(), 1, "{v:?}");
                assert!(v[0].starts_with("image:"));
            } else {
                assert!(v.is_empty(), "{name}: {v:?}");
            }
        }
    }
}
