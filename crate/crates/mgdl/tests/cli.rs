use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mgdl::io::{read_ppm, CsvTable};
use mgdl::report::Metrics;
use mgdl::ExperimentConfig;
use mgdl_core::formats::{encode_idx, IdxTensor};

fn mgdl(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mgdl"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn shipped_configs_validate() {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let o = mgdl(&["validate", path.to_str().unwrap()], dir.path());
        assert!(o.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&o.stdout));
    }
}

#[test]
fn synthetic_run_writes_readable_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = mgdl(
        &["run", "desk-synthetic-2", "--epochs", "40", "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let m = Metrics::read(&out.join("metrics.json")).unwrap();
    assert_eq!((m.task.as_str(), m.method.as_str()), ("synthetic-2", "mgdl"));
    assert_eq!(m.grades.len(), 3);
    assert_eq!(m.residue_norms.len(), 4);
    assert!(m.tr_rse.is_finite() && m.tr_psnr.is_none());

    let cfg = ExperimentConfig::load(&out.join("config.toml")).unwrap();
    assert_eq!(cfg.epochs, 40);
    assert!(cfg.validate().is_empty());

    let preds = CsvTable::read(&out.join("predictions.csv")).unwrap();
    assert_eq!(preds.header, ["x1", "y1", "grade1_y1", "grade2_y1", "grade3_y1"]);
    assert_eq!(preds.rows.len(), 256);

    let spec = CsvTable::read(&out.join("spectrum.csv")).unwrap();
    assert_eq!(spec.header, ["frequency", "target", "grade1", "grade2", "grade3", "model"]);
    assert_eq!(spec.rows.len(), 65);
    let target = spec.column("target").unwrap();
    assert!((target[2] - 1.05 + 0.05).abs() <= 1e-9);

    let evo = CsvTable::read(&out.join("evolution.csv")).unwrap();
    assert_eq!(evo.header[0], "epoch");
    assert_eq!(evo.header.len(), 6);
    assert!(evo.rows.iter().flat_map(|r| &r[1..]).all(|v| (0.0..=1.0).contains(v)));

    let log = fs::read_to_string(out.join("train_log.jsonl")).unwrap();
    let events: Vec<serde_json::Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(events.iter().filter(|e| e["event"] == "epoch").count(), 120);
    assert_eq!(events.iter().filter(|e| e["event"] == "grade_end").count(), 3);

    let timing: serde_json::Value = serde_json::from_slice(&fs::read(out.join("timing.json")).unwrap()).unwrap();
    assert_eq!(timing["grades"].as_array().unwrap().len(), 3);
}

#[test]
fn sgdl_run_reports_a_single_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = mgdl(
        &["run", "desk-manifold-1", "--method", "sgdl", "--epochs", "10", "--sgdl-epochs", "25", "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let m = Metrics::read(&out.join("metrics.json")).unwrap();
    assert_eq!(m.method, "sgdl");
    assert_eq!(m.grades.len(), 1);
    assert!(m.monotonic.is_none());
    let spec = CsvTable::read(&out.join("spectrum.csv")).unwrap();
    assert_eq!(spec.header, ["frequency", "target", "model"]);
    let log = fs::read_to_string(out.join("train_log.jsonl")).unwrap();
    assert_eq!(log.lines().filter(|l| l.contains("\"epoch\"")).count(), 25);
}

#[test]
fn image_run_writes_reconstruction() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("img");
    let o = mgdl(&["run", "desk-image", "--grades", "2", "--epochs", "5", "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let m = Metrics::read(&out.join("metrics.json")).unwrap();
    assert!(m.grades.iter().all(|g| g.tr_psnr.is_some() && g.te_psnr.is_some()));
    let img = read_ppm(&out.join("reconstruction.ppm")).unwrap();
    assert_eq!((img.width, img.height), (64, 64));
    assert!(!out.join("spectrum.csv").exists());
}

#[test]
fn image_from_ppm_file_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut raster = b"P6\n8 6\n255\n".to_vec();
    raster.extend((0..8 * 6 * 3).map(|i| (i * 5 % 256) as u8));
    fs::write(dir.path().join("tiny.ppm"), raster).unwrap();
    let cfg = write(
        dir.path(),
        "tiny.toml",
        "task = \"image\"\nimage = \"tiny.ppm\"\ngrades = 1\nepochs = 3\nspectrum_grid = 0\nsnapshot_every = 0\n",
    );
    let out = dir.path().join("o");
    let o = mgdl(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], Path::new("/"));
    assert!(o.status.success(), "{}", stderr(&o));
    let preds = CsvTable::read(&out.join("predictions.csv")).unwrap();
    assert_eq!(preds.rows.len(), 48);
}

fn write_mnist(dir: &Path, n_train: usize, n_test: usize) {
    let tensor = |dims: Vec<usize>, f: &dyn Fn(usize) -> u8| {
        let n: usize = dims.iter().product();
        encode_idx(&IdxTensor {
            dims,
            data: (0..n).map(f).collect(),
        })
    };
    let files = [
        tensor(vec![n_train, 3, 3], &|i| (i * 31 % 256) as u8),
        tensor(vec![n_train], &|i| (i % 10) as u8),
        tensor(vec![n_test, 3, 3], &|i| (i * 17 % 256) as u8),
        tensor(vec![n_test], &|i| (i * 3 % 10) as u8),
    ];
    for (name, bytes) in mgdl::io::MNIST_FILES.iter().zip(files) {
        fs::write(dir.join(name), bytes).unwrap();
    }
}

#[test]
fn mnist_run_on_fixture_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("mnist");
    fs::create_dir(&data).unwrap();
    write_mnist(&data, 40, 12);
    let cfg = write(
        dir.path(),
        "m.toml",
        "task = \"mnist\"\nmnist_dir = \"mnist\"\nn_train = 20\nn_val = 10\nn_test = 8\ngrades = 2\nhidden_width = 8\nepochs = 4\nbatch_size = 8\nspectrum_grid = 0\nsnapshot_every = 0\n",
    );
    let out = dir.path().join("o");
    let o = mgdl(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let preds = CsvTable::read(&out.join("predictions.csv")).unwrap();
    assert_eq!(preds.rows.len(), 8);
    assert_eq!(preds.header.len(), 10 + 2 * 10);
    assert_eq!(preds.header[0], "y1");
}

#[test]
fn inverted_rates_rejected_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "t_max = 1e-4\nt_min = 1e-3\n");
    let out = dir.path().join("o");
    let o = mgdl(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("t_min"), "{}", stderr(&o));
    assert!(!out.exists());
    let v = mgdl(&["validate", cfg.to_str().unwrap()], dir.path());
    assert_eq!(v.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&v.stdout).starts_with("t_min:"));
}

#[test]
fn error_classes_have_distinct_codes_and_messages() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "u.toml", "epochz = 3\n");
    let missing = write(dir.path(), "m.toml", "task = \"mnist\"\nmnist_dir = \"nowhere\"\nn_train = 2\nn_val = 1\nn_test = 1\n");
    let diverge = write(
        dir.path(),
        "d.toml",
        "grades = 1\nepochs = 50\nt_max = 1e300\nt_min = 1e300\nsnapshot_every = 0\n",
    );
    let mut seen = Vec::new();
    for (cfg, code, needle) in [
        (&unknown, 2, "epochz"),
        (&missing, 4, "nowhere"),
        (&diverge, 5, "diverge"),
    ] {
        let out = dir.path().join(format!("o{code}"));
        let o = mgdl(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], dir.path());
        let msg = stderr(&o);
        assert_eq!(o.status.code(), Some(code), "{msg}");
        assert!(msg.to_lowercase().contains(needle), "{msg}");
        assert!(!out.join("metrics.json").exists());
        seen.push(msg);
    }
    seen.dedup();
    assert_eq!(seen.len(), 3);
    let o = mgdl(&["run", "no-such-preset"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_rerun_removes_stale_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    fs::create_dir(&out).unwrap();
    fs::write(out.join("metrics.json"), "{}").unwrap();
    let cfg = write(dir.path(), "d.toml", "grades = 1\nepochs = 50\nt_max = 1e300\nt_min = 1e300\n");
    let o = mgdl(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], dir.path());
    assert!(!o.status.success());
    assert!(!out.join("metrics.json").exists());
}

#[test]
fn report_and_spectrum_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, method) in [(&a, "mgdl"), (&b, "sgdl")] {
        let o = mgdl(
            &["run", "desk-synthetic-1", "--method", method, "--epochs", "5", "--out", out.to_str().unwrap()],
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let table = dir.path().join("t.csv");
    let o = mgdl(&["report", a.to_str().unwrap(), b.to_str().unwrap(), "--out", table.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(&table).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), mgdl::report::REPORT_HEADER);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[1][2], "sgdl");

    let samples = dir.path().join("s.csv");
    let mut t = CsvTable::new(vec!["v".into()]);
    t.rows = (0..64).map(|l| vec![3.0 * (2.0 * std::f64::consts::PI * 5.0 * l as f64 / 64.0).sin()]).collect();
    t.write(&samples).unwrap();
    let spec = dir.path().join("spec.csv");
    let o = mgdl(
        &["spectrum", samples.to_str().unwrap(), "--band-edge", "5", "--out", spec.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let s = CsvTable::read(&spec).unwrap();
    let amp = s.column("amplitude").unwrap();
    assert_eq!(amp.len(), 33);
    assert!((amp[5] - 3.0).abs() <= 1e-9);
    assert!(stderr(&o).contains("energy fraction at or below 5: 1"));
}

#[test]
fn export_writes_every_split() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data.csv");
    let o = mgdl(&["export", "desk-manifold-2", "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(&out).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["x1", "x2", "y1", "split"]);
    let tags: Vec<String> = r.records().map(|rec| rec.unwrap()[3].to_string()).collect();
    for tag in ["train", "val", "test"] {
        assert_eq!(tags.iter().filter(|t| *t == tag).count(), 256);
    }
}

#[test]
fn presets_listed() {
    let o = mgdl(&["presets"], Path::new("."));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().any(|l| l.starts_with("desk-image")));
    assert!(text.lines().any(|l| l.starts_with("full-mnist")));
}
