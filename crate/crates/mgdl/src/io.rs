//! Reading data files and writing or re-reading run artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mgdl_core::datasets::DatasetSplit;
use mgdl_core::formats::{encode_ppm, parse_idx, parse_ppm, IdxTensor, RgbImage};

use crate::error::{write_err, RunError};

/// Standard MNIST file names inside `mnist_dir`.
pub const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

fn read_bytes(path: &Path) -> Result<Vec<u8>, RunError> {
    fs::read(path).map_err(|source| RunError::MissingFile {
        path: path.to_owned(),
        source,
    })
}

pub fn read_idx(path: &Path) -> Result<IdxTensor, RunError> {
    parse_idx(&read_bytes(path)?).map_err(|e| RunError::BadData {
        path: path.to_owned(),
        detail: e.to_string(),
    })
}

pub fn read_ppm(path: &Path) -> Result<RgbImage, RunError> {
    parse_ppm(&read_bytes(path)?).map_err(|e| RunError::BadData {
        path: path.to_owned(),
        detail: e.to_string(),
    })
}

pub fn write_ppm(path: &Path, image: &RgbImage) -> Result<(), RunError> {
    fs::write(path, encode_ppm(image)).map_err(write_err(path))
}

/// The first `n` items of `t`, or all of them when `n` exceeds the count.
pub fn take_items(t: &IdxTensor, n: usize) -> IdxTensor {
    let n = n.min(t.len());
    let mut dims = t.dims.clone();
    dims[0] = n;
    IdxTensor {
        dims,
        data: t.data[..n * t.item_size()].to_vec(),
    }
}

/// Writes `contents` to a sibling temporary file, then renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), RunError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(write_err(&tmp))?;
    f.write_all(contents).map_err(write_err(&tmp))?;
    f.sync_all().map_err(write_err(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(write_err(path))
}

/// A numeric CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(header: Vec<String>) -> Self {
        CsvTable {
            header,
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write(&self, path: &Path) -> Result<(), RunError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_write_err(path, e))?;
        w.write_record(&self.header).map_err(|e| csv_write_err(path, e))?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&v| format_number(v)))
                .map_err(|e| csv_write_err(path, e))?;
        }
        w.flush().map_err(write_err(path))
    }

    pub fn read(path: &Path) -> Result<Self, RunError> {
        let bad = |detail: String| RunError::BadData {
            path: path.to_owned(),
            detail,
        };
        let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => RunError::MissingFile {
                path: path.to_owned(),
                source,
            },
            other => bad(format!("{other:?}")),
        })?;
        let header = r
            .headers()
            .map_err(|e| bad(e.to_string()))?
            .iter()
            .map(str::to_owned)
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let row = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
            rows.push(row);
        }
        Ok(CsvTable { header, rows })
    }
}

/// Shortest text that parses back to `v`, in exponent form for very small
/// or very large magnitudes.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// All three splits in one CSV: input columns `x1..`, target columns
/// `y1..` and a `split` column of `train`, `val` or `test`.
pub fn write_dataset(path: &Path, split: &DatasetSplit) -> Result<(), RunError> {
    let d = split.train.inputs.cols();
    let c = split.train.targets.cols();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_write_err(path, e))?;
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.extend((1..=c).map(|i| format!("y{i}")));
    header.push("split".into());
    w.write_record(&header).map_err(|e| csv_write_err(path, e))?;
    for (tag, table) in [("train", &split.train), ("val", &split.validation), ("test", &split.test)] {
        for r in 0..table.len() {
            let mut rec: Vec<String> = table.inputs.row(r).iter().map(|&v| format_number(v)).collect();
            rec.extend(table.targets.row(r).iter().map(|&v| format_number(v)));
            rec.push(tag.into());
            w.write_record(&rec).map_err(|e| csv_write_err(path, e))?;
        }
    }
    w.flush().map_err(write_err(path))
}

fn csv_write_err(path: &Path, e: csv::Error) -> RunError {
    RunError::Write {
        path: path.to_owned(),
        source: e.into(),
    }
}
