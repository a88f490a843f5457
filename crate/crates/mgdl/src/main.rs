use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mgdl::config::{ExperimentConfig, Method};
use mgdl::io::{write_dataset, CsvTable};
use mgdl::presets::{preset, PRESETS};
use mgdl::report::{comparison_table, REPORT_HEADER};
use mgdl::runner;
use mgdl::RunError;
use mgdl_core::spectrum::{band_energy_fraction, one_side_spectrum};

#[derive(Parser)]
#[command(name = "mgdl", version, about = "Multi-grade deep learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config file or a preset name.
    Run {
        /// Config file path or preset name (see `mgdl presets`).
        config: String,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        grades: Option<i64>,
        /// Epochs per grade.
        #[arg(long)]
        epochs: Option<i64>,
        #[arg(long)]
        sgdl_epochs: Option<i64>,
        #[arg(long)]
        seed: Option<i64>,
        #[arg(long)]
        q: Option<i64>,
        #[arg(long)]
        image: Option<String>,
        #[arg(long)]
        mnist_dir: Option<String>,
        /// Output directory; defaults to `output_dir` or runs/<name>-<method>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config or preset without running it.
    Validate { config: String },
    /// One-sided amplitude spectrum of samples on the grid ℓ/N, read from a CSV column.
    Spectrum {
        csv: PathBuf,
        /// Column name; defaults to the first column.
        #[arg(long)]
        column: Option<String>,
        /// Also report the energy fraction at or below this frequency.
        #[arg(long)]
        band_edge: Option<f64>,
        /// Write the spectrum here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the train, validation and test splits of a config to one CSV.
    Export {
        config: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate run directories into a comparison table CSV.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in presets.
    Presets,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Loads `source` as a config file when it names one, otherwise as a preset.
fn load(source: &str, method: Option<Method>) -> Result<(ExperimentConfig, PathBuf, String), RunError> {
    let path = Path::new(source);
    if path.is_file() || source.ends_with(".toml") {
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(m) = method {
            cfg.method = m.as_str().into();
        }
        let base = path.parent().map(Path::to_owned).unwrap_or_default();
        let name = path.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
        Ok((cfg, base, name))
    } else {
        let cfg = preset(source, method.unwrap_or(Method::Mgdl))
            .ok_or_else(|| RunError::UnknownPreset(source.into()))?;
        Ok((cfg, PathBuf::from("."), source.into()))
    }
}

fn parse_method(m: Option<String>) -> Result<Option<Method>, RunError> {
    m.map(|s| {
        Method::parse(&s).ok_or_else(|| {
            RunError::InvalidConfig(vec![format!("method: expected \"mgdl\" or \"sgdl\", got {s:?}")])
        })
    })
    .transpose()
}

fn dispatch(cmd: Command) -> Result<ExitCode, RunError> {
    match cmd {
        Command::Run {
            config,
            method,
            grades,
            epochs,
            sgdl_epochs,
            seed,
            q,
            image,
            mnist_dir,
            out,
        } => {
            let (mut cfg, base, name) = load(&config, parse_method(method)?)?;
            if let Some(v) = grades {
                cfg.grades = v;
            }
            if let Some(v) = epochs {
                cfg.epochs = v;
            }
            if let Some(v) = sgdl_epochs {
                cfg.sgdl_epochs = Some(v);
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = q {
                cfg.q = v;
            }
            if image.is_some() {
                cfg.image = image;
            }
            if mnist_dir.is_some() {
                cfg.mnist_dir = mnist_dir;
            }
            let out = out
                .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("runs").join(format!("{name}-{}", cfg.method)));
            let metrics = runner::run(&cfg, &base, &out)?;
            for g in &metrics.grades {
                let mut line = format!(
                    "grade {}: TrRSE {:.3e}  VaRSE {:.3e}  TeRSE {:.3e}",
                    g.grade, g.tr_rse, g.va_rse, g.te_rse
                );
                if let (Some(tr), Some(te)) = (g.tr_psnr, g.te_psnr) {
                    line.push_str(&format!("  TrPSNR {:.2}  TePSNR {:.2}", tr.0, te.0));
                }
                println!("{line}");
            }
            if let Some(m) = &metrics.monotonic {
                for v in &m.violations {
                    eprintln!(
                        "warning: residual norm rose at grade {}: {} -> {} (learned function norm {})",
                        v.position, v.before, v.after, v.function_norm
                    );
                }
            }
            println!("wrote {}", out.join("metrics.json").display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let (cfg, _, _) = load(&config, None)?;
            let violations = cfg.validate();
            if violations.is_empty() {
                println!("ok");
                Ok(ExitCode::SUCCESS)
            } else {
                for v in &violations {
                    println!("{v}");
                }
                Ok(ExitCode::from(3))
            }
        }
        Command::Spectrum {
            csv,
            column,
            band_edge,
            out,
        } => {
            let table = CsvTable::read(&csv)?;
            let name = column.unwrap_or_else(|| table.header.first().cloned().unwrap_or_default());
            let samples = table.column(&name).ok_or_else(|| RunError::BadData {
                path: csv.clone(),
                detail: format!("no column named {name:?}"),
            })?;
            let spec = one_side_spectrum(&samples).map_err(|e| RunError::BadData {
                path: csv.clone(),
                detail: e.to_string(),
            })?;
            let mut result = CsvTable::new(vec!["frequency".into(), "amplitude".into()]);
            result.rows = spec
                .frequencies
                .iter()
                .zip(&spec.amplitudes)
                .map(|(&f, &a)| vec![f, a])
                .collect();
            match out {
                Some(p) => result.write(&p)?,
                None => {
                    let mut w = std::io::stdout().lock();
                    writeln!(w, "frequency,amplitude").ok();
                    for r in &result.rows {
                        writeln!(w, "{},{}", r[0], r[1]).ok();
                    }
                }
            }
            if let Some(edge) = band_edge {
                let frac = band_energy_fraction(&samples, edge)?;
                eprintln!("energy fraction at or below {edge}: {frac}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { config, out } => {
            let (cfg, base, _) = load(&config, None)?;
            let prepared = runner::prepare(&cfg, &base)?;
            write_dataset(&out, &prepared.split)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { runs, out } => {
            let rows = comparison_table(&runs)?;
            let mut buf = csv::Writer::from_writer(Vec::new());
            buf.write_record(REPORT_HEADER).expect("in-memory write");
            for r in &rows {
                buf.write_record(r).expect("in-memory write");
            }
            let bytes = buf.into_inner().expect("in-memory flush");
            match out {
                Some(p) => std::fs::write(&p, bytes).map_err(|source| RunError::Write { path: p, source })?,
                None => std::io::stdout().write_all(&bytes).map_err(|source| RunError::Write {
                    path: "<stdout>".into(),
                    source,
                })?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Presets => {
            for (name, about) in PRESETS {
                println!("{name:<20} {about}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
