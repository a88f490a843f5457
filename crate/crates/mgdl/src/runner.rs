//! Executes one experiment config and writes its artifacts.
//!
//! Files in the output directory:
//! - `config.toml`: the resolved config
//! - `train_log.jsonl`: one record per epoch plus grade start/end records
//! - `predictions.csv`: test inputs (up to three columns), targets and the
//!   prediction after each grade
//! - `spectrum.csv`, `evolution.csv`: synthetic and manifold tasks only
//! - `reconstruction.ppm`: image task only
//! - `timing.json`: wall-clock seconds per grade
//! - `metrics.json`: written last; its presence marks a completed run

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use mgdl_core::datasets::{
    build_image_split, build_manifold_split, build_mnist_split, build_synthetic_split, eval_lambda,
    manifold_probe, raster_from_predictions, spectrum_grid, DatasetSplit, ManifoldSpec,
    MnistTargetSpec, SplitSeeds, SplitSizes, SyntheticSpec,
};
use mgdl_core::formats::RgbImage;
use mgdl_core::grade::{
    run_mgdl, run_sgdl, GradeRecord, GradeSpec, Observer, Probe, RegressionData, Snapshot,
};
use mgdl_core::metrics::{psnr_unit, rse};
use mgdl_core::nn::{predict_batch, EpochLoss, MlpSpec, TrainConfig};
use mgdl_core::spectrum::{one_side_spectrum, EvolutionMatrix, EvolutionRecorder};
use mgdl_core::Matrix;
use serde_json::json;

use crate::config::{ExperimentConfig, Method, Task, BUILTIN_TEST_CARD};
use crate::error::{write_err, RunError};
use crate::io::{read_idx, read_ppm, take_items, write_atomic, write_ppm, CsvTable, MNIST_FILES};
use crate::report::{
    Decibels, GradeMetrics, GradeTiming, Metrics, MonotonicSummary, Timing, Violation,
};
use crate::testcard::test_card;

/// Side length of the built-in test card.
pub const TEST_CARD_SIZE: usize = 64;

/// Dataset plus what the spectral outputs need.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub task: Task,
    pub split: DatasetSplit,
    /// The one-dimensional target, for synthetic and manifold tasks.
    pub target: Option<SyntheticSpec>,
    /// Model inputs at the periodic grid `ℓ/n` when spectra are enabled.
    pub probe_inputs: Option<Matrix>,
    pub image: Option<RgbImage>,
}

/// Builds the dataset of a validated config.
pub fn prepare(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Prepared, RunError> {
    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(RunError::InvalidConfig(violations));
    }
    let task = cfg.task_kind().expect("validated");
    let sizes = SplitSizes {
        train: cfg.n_train as usize,
        val: cfg.n_val as usize,
        test: cfg.n_test as usize,
    };
    let seeds = SplitSeeds {
        val: cfg.val_seed as u64,
        test: cfg.test_seed as u64,
    };
    let grid = (cfg.spectrum_grid >= 2).then(|| spectrum_grid(cfg.spectrum_grid as usize));
    let curve = |rule| -> Result<SyntheticSpec, RunError> {
        Ok(SyntheticSpec::new(cfg.components as usize, rule, cfg.phase_seed as u64)?
            .with_frequency_step(cfg.frequency_step))
    };
    let resolve = |p: &str| -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_owned()
        } else {
            base_dir.join(p)
        }
    };

    Ok(match task {
        Task::Synthetic(s) => {
            let target = curve(SyntheticSpec::setting_rule(s)?)?;
            let probe_inputs = grid.map(Matrix::column).transpose()?;
            Prepared {
                task,
                split: build_synthetic_split(&target, sizes, seeds)?,
                target: Some(target),
                probe_inputs,
                image: None,
            }
        }
        Task::Manifold(s) => {
            let spec = ManifoldSpec {
                q: cfg.q as u32,
                target: curve(ManifoldSpec::setting_rule(s)?)?,
            };
            let probe_inputs = grid.map(|g| manifold_probe(spec.q, &g)).transpose()?;
            Prepared {
                task,
                split: build_manifold_split(&spec, sizes, seeds)?,
                target: Some(spec.target),
                probe_inputs,
                image: None,
            }
        }
        Task::Image => {
            let src = cfg.image.as_deref().expect("validated");
            let image = if src == BUILTIN_TEST_CARD {
                test_card(TEST_CARD_SIZE)
            } else {
                read_ppm(&resolve(src))?
            };
            Prepared {
                task,
                split: build_image_split(&image, cfg.image_stride as usize)?,
                target: None,
                probe_inputs: None,
                image: Some(image),
            }
        }
        Task::Mnist => {
            let dir = resolve(cfg.mnist_dir.as_deref().expect("validated"));
            let [tri, trl, tei, tel] = MNIST_FILES.map(|f| dir.join(f));
            let pool = sizes.train + sizes.val;
            let train_images = take_items(&read_idx(&tri)?, pool);
            let train_labels = take_items(&read_idx(&trl)?, pool);
            let test_images = take_items(&read_idx(&tei)?, sizes.test);
            let test_labels = take_items(&read_idx(&tel)?, sizes.test);
            let spec = MnistTargetSpec {
                n_train: sizes.train,
                n_val: sizes.val,
                ..MnistTargetSpec::new(cfg.beta, cfg.kappa)?
            };
            Prepared {
                task,
                split: build_mnist_split(
                    &train_images,
                    &train_labels,
                    &test_images,
                    &test_labels,
                    &spec,
                    cfg.split_seed as u64,
                )?,
                target: None,
                probe_inputs: None,
                image: None,
            }
        }
    })
}

fn hidden(width: usize, count: usize) -> impl Iterator<Item = usize> {
    std::iter::repeat_n(width, count)
}

/// Grade specs of an MGDL run: grade 1 reads the raw inputs, later grades
/// the previous grade's last hidden layer.
pub fn grade_specs(cfg: &ExperimentConfig, d_in: usize, d_out: usize) -> Result<Vec<GradeSpec>, RunError> {
    let w = cfg.hidden_width as usize;
    let batch = cfg.batch().expect("validated");
    (0..cfg.grades as usize)
        .map(|k| {
            let input = if k == 0 { d_in } else { w };
            let widths: Vec<usize> = std::iter::once(input)
                .chain(hidden(w, cfg.hidden_per_grade as usize))
                .chain(std::iter::once(d_out))
                .collect();
            let (t_max, t_min) = cfg.grade_rates(k);
            let train = TrainConfig::new(t_max, t_min, cfg.epochs as usize, batch, cfg.seed as u64)?;
            Ok(GradeSpec::new(MlpSpec::new(widths)?, train)?)
        })
        .collect()
}

/// The SGDL network with the same total hidden layers as the MGDL grades.
pub fn sgdl_spec(cfg: &ExperimentConfig, d_in: usize, d_out: usize) -> Result<(MlpSpec, TrainConfig), RunError> {
    let depth = (cfg.grades * cfg.hidden_per_grade) as usize;
    let widths: Vec<usize> = std::iter::once(d_in)
        .chain(hidden(cfg.hidden_width as usize, depth))
        .chain(std::iter::once(d_out))
        .collect();
    let train = TrainConfig::new(
        cfg.t_max,
        cfg.t_min,
        cfg.sgdl_epoch_count() as usize,
        cfg.batch().expect("validated"),
        cfg.seed as u64,
    )?;
    Ok((MlpSpec::new(widths)?, train))
}

/// Streams the training log and collects timing and evolution rows.
struct RunObserver<W: Write> {
    log: W,
    log_path: PathBuf,
    error: Option<RunError>,
    started: Option<Instant>,
    timing: Vec<GradeTiming>,
    evolution: Option<EvolutionRecorder>,
}

impl<W: Write> RunObserver<W> {
    fn emit(&mut self, record: serde_json::Value) {
        if self.error.is_some() {
            return;
        }
        let mut line = record.to_string();
        line.push('\n');
        if let Err(e) = self.log.write_all(line.as_bytes()) {
            self.error = Some(write_err(&self.log_path)(e));
        }
    }
}

impl<W: Write> Observer for RunObserver<W> {
    fn on_grade_start(&mut self, grade: usize) {
        self.started = Some(Instant::now());
        self.emit(json!({ "event": "grade_start", "grade": grade }));
    }

    fn on_epoch(&mut self, grade: usize, loss: &EpochLoss) {
        self.emit(json!({
            "event": "epoch",
            "grade": grade,
            "epoch": loss.epoch + 1,
            "lr": loss.lr,
            "train_loss": loss.train_loss,
            "val_loss": loss.val_loss,
        }));
    }

    fn on_snapshot(&mut self, s: &Snapshot<'_>) {
        if let Some(rec) = self.evolution.as_mut() {
            if let Err(e) = rec.push(s.global_epoch, s.outputs.as_slice()) {
                self.error.get_or_insert(RunError::Core(e));
            }
        }
    }

    fn on_grade_end(&mut self, r: &GradeRecord) {
        let wall = self.started.take().map_or(0.0, |t| t.elapsed().as_secs_f64());
        self.timing.push(GradeTiming {
            grade: r.index,
            wall_time: wall,
        });
        self.emit(json!({
            "event": "grade_end",
            "grade": r.index,
            "best_epoch": r.best_epoch + 1,
            "train_residue_norm": r.train_residue_norm,
            "val_residue_norm": r.val_residue_norm,
            "output_norm": r.output_norm,
            "wall_time": wall,
        }));
    }
}

/// Predictions after each grade (one entry for SGDL) on one split.
type Stages = Vec<Matrix>;

struct Trained {
    train: Stages,
    val: Stages,
    test: Stages,
    /// Per-grade outputs `g_l` on the probe grid.
    probe: Option<Stages>,
    best_epochs: Vec<usize>,
    residue_norms: Vec<f64>,
    monotonic: Option<MonotonicSummary>,
}

/// Runs `cfg` and writes every artifact into `out_dir`. Relative data
/// paths in the config are resolved against `base_dir`.
pub fn run(cfg: &ExperimentConfig, base_dir: &Path, out_dir: &Path) -> Result<Metrics, RunError> {
    let prepared = prepare(cfg, base_dir)?;
    let method = cfg.method_kind().expect("validated");

    fs::create_dir_all(out_dir).map_err(write_err(out_dir))?;
    let metrics_path = out_dir.join("metrics.json");
    match fs::remove_file(&metrics_path) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => return Err(write_err(&metrics_path)(e)),
    }
    let cfg_path = out_dir.join("config.toml");
    fs::write(&cfg_path, cfg.to_toml_string()).map_err(write_err(&cfg_path))?;

    let log_path = out_dir.join("train_log.jsonl");
    let log = BufWriter::new(fs::File::create(&log_path).map_err(write_err(&log_path))?);
    let evolution = match (&prepared.target, &prepared.probe_inputs) {
        (Some(t), Some(_)) if cfg.snapshot_every > 0 => {
            Some(EvolutionRecorder::new(t, cfg.spectrum_grid as usize)?)
        }
        _ => None,
    };
    let mut obs = RunObserver {
        log,
        log_path: log_path.clone(),
        error: None,
        started: None,
        timing: Vec::new(),
        evolution,
    };
    let probe = match (&prepared.probe_inputs, cfg.snapshot_every) {
        (Some(inputs), every) if every > 0 => Some(Probe {
            inputs: inputs.clone(),
            every: every as usize,
        }),
        _ => None,
    };

    let start = Instant::now();
    let trained = train(cfg, method, &prepared, probe.as_ref(), &mut obs)?;
    let total = start.elapsed().as_secs_f64();
    if let Some(e) = obs.error.take() {
        return Err(e);
    }
    obs.log.flush().map_err(write_err(&log_path))?;
    let RunObserver {
        timing, evolution, ..
    } = obs;

    let metrics = score(cfg, &prepared, &trained)?;
    write_predictions(&out_dir.join("predictions.csv"), &prepared.split, &trained.test)?;
    if let (Some(target), Some(outputs)) = (&prepared.target, &trained.probe) {
        write_spectrum(&out_dir.join("spectrum.csv"), target, cfg.spectrum_grid as usize, outputs)?;
    }
    if let Some(rec) = evolution {
        write_evolution(&out_dir.join("evolution.csv"), &rec.finish())?;
    }
    if let Some(image) = &prepared.image {
        let last = trained.test.last().expect("at least one stage");
        let raster = raster_from_predictions(image.height, image.width, last)?;
        write_ppm(&out_dir.join("reconstruction.ppm"), &raster)?;
    }
    let timing = Timing {
        grades: timing,
        total,
    };
    let timing_path = out_dir.join("timing.json");
    let timing_json = serde_json::to_string_pretty(&timing).expect("timing serializes");
    fs::write(&timing_path, timing_json).map_err(write_err(&timing_path))?;
    write_atomic(&metrics_path, metrics.to_json().as_bytes())?;
    Ok(metrics)
}

fn train<W: Write>(
    cfg: &ExperimentConfig,
    method: Method,
    prepared: &Prepared,
    probe: Option<&Probe>,
    obs: &mut RunObserver<W>,
) -> Result<Trained, RunError> {
    let split = &prepared.split;
    let data = RegressionData {
        train: split.train.supervised(),
        val: Some(split.validation.supervised()),
    };
    let d_in = split.train.inputs.cols();
    let d_out = split.train.targets.cols();
    let seed = cfg.seed as u64;
    match method {
        Method::Mgdl => {
            let grades = grade_specs(cfg, d_in, d_out)?;
            let out = run_mgdl(data, &grades, seed, probe, obs)?;
            let m = &out.model;
            let probe_out = match &prepared.probe_inputs {
                Some(p) => Some(m.grade_outputs(p)?),
                None => None,
            };
            Ok(Trained {
                train: m.cumulative_predictions(&split.train.inputs)?,
                val: m.cumulative_predictions(&split.validation.inputs)?,
                test: m.cumulative_predictions(&split.test.inputs)?,
                probe: probe_out,
                best_epochs: m.grades().iter().map(|g| g.best_epoch).collect(),
                residue_norms: out.residue_norms.clone(),
                monotonic: Some(MonotonicSummary {
                    passed: out.monotonic.passed(),
                    violations: out
                        .monotonic
                        .violations
                        .iter()
                        .map(|v| Violation {
                            position: v.position,
                            before: v.before,
                            after: v.after,
                            function_norm: v.function_norm,
                        })
                        .collect(),
                }),
            })
        }
        Method::Sgdl => {
            let (net, tc) = sgdl_spec(cfg, d_in, d_out)?;
            let out = run_sgdl(data, &net, &tc, seed, probe, obs)?;
            let predict = |x: &Matrix| predict_batch(&out.spec, &out.params, x);
            let probe_out = match &prepared.probe_inputs {
                Some(p) => Some(vec![predict(p)?]),
                None => None,
            };
            Ok(Trained {
                train: vec![predict(&split.train.inputs)?],
                val: vec![predict(&split.validation.inputs)?],
                test: vec![predict(&split.test.inputs)?],
                probe: probe_out,
                best_epochs: vec![out.best_epoch],
                residue_norms: out.residue_norms.clone(),
                monotonic: None,
            })
        }
    }
}

fn score(cfg: &ExperimentConfig, prepared: &Prepared, t: &Trained) -> Result<Metrics, RunError> {
    let split = &prepared.split;
    let image = prepared.image.is_some();
    let mut grades = Vec::with_capacity(t.train.len());
    for k in 0..t.train.len() {
        let psnr = |targets: &Matrix, preds: &Matrix| -> Result<Option<Decibels>, RunError> {
            Ok(if image {
                Some(Decibels(psnr_unit(targets, preds)?))
            } else {
                None
            })
        };
        grades.push(GradeMetrics {
            grade: k + 1,
            best_epoch: t.best_epochs[k] + 1,
            tr_rse: rse(&t.train[k], &split.train.targets)?,
            va_rse: rse(&t.val[k], &split.validation.targets)?,
            te_rse: rse(&t.test[k], &split.test.targets)?,
            tr_psnr: psnr(&split.train.targets, &t.train[k])?,
            te_psnr: psnr(&split.test.targets, &t.test[k])?,
            train_residue_norm: t.residue_norms[k + 1],
        });
    }
    let last = grades.last().expect("at least one stage").clone();
    Ok(Metrics {
        task: cfg.task.clone(),
        method: cfg.method_kind().expect("validated").as_str().into(),
        seed: cfg.seed as u64,
        tr_rse: last.tr_rse,
        va_rse: last.va_rse,
        te_rse: last.te_rse,
        tr_psnr: last.tr_psnr,
        te_psnr: last.te_psnr,
        grades,
        residue_norms: t.residue_norms.clone(),
        monotonic: t.monotonic.clone(),
    })
}

fn write_predictions(path: &Path, split: &DatasetSplit, stages: &Stages) -> Result<(), RunError> {
    let x = &split.test.inputs;
    let y = &split.test.targets;
    let show_inputs = x.cols() <= 3;
    let mut header = Vec::new();
    if show_inputs {
        header.extend((1..=x.cols()).map(|i| format!("x{i}")));
    }
    header.extend((1..=y.cols()).map(|c| format!("y{c}")));
    for k in 1..=stages.len() {
        header.extend((1..=y.cols()).map(|c| format!("grade{k}_y{c}")));
    }
    let mut table = CsvTable::new(header);
    for r in 0..x.rows() {
        let mut row = Vec::with_capacity(table.header.len());
        if show_inputs {
            row.extend_from_slice(x.row(r));
        }
        row.extend_from_slice(y.row(r));
        for s in stages {
            row.extend_from_slice(s.row(r));
        }
        table.rows.push(row);
    }
    table.write(path)
}

fn write_spectrum(path: &Path, target: &SyntheticSpec, n: usize, outputs: &Stages) -> Result<(), RunError> {
    let grid = spectrum_grid(n);
    let target_samples: Vec<f64> = grid.iter().map(|&x| eval_lambda(target, x)).collect();
    let mut columns = vec![one_side_spectrum(&target_samples)?];
    let mut header = vec!["frequency".to_string(), "target".to_string()];
    let mut sum = vec![0.0; n];
    for (k, out) in outputs.iter().enumerate() {
        let samples = out.as_slice();
        for (s, v) in sum.iter_mut().zip(samples) {
            *s += v;
        }
        if outputs.len() > 1 {
            columns.push(one_side_spectrum(samples)?);
            header.push(format!("grade{}", k + 1));
        }
    }
    columns.push(one_side_spectrum(&sum)?);
    header.push("model".into());
    let mut table = CsvTable::new(header);
    for (i, &f) in columns[0].frequencies.iter().enumerate() {
        let mut row = vec![f];
        row.extend(columns.iter().map(|c| c.amplitudes[i]));
        table.rows.push(row);
    }
    table.write(path)
}

fn write_evolution(path: &Path, m: &EvolutionMatrix) -> Result<(), RunError> {
    let mut header = vec!["epoch".to_string()];
    header.extend(m.frequencies.iter().map(|k| format!("freq{k}")));
    let mut table = CsvTable::new(header);
    for (epoch, row) in m.epochs.iter().zip(&m.rows) {
        let mut r = vec![*epoch as f64];
        r.extend_from_slice(row);
        table.rows.push(r);
    }
    table.write(path)
}
