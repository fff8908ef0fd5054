//! Sample ingestion, train/calibration splits, and result serialization.
//!
//! All three sample formats are header-free CSV by default: partition files
//! hold one label vector per row, vector files one real vector per row, and
//! distance files a dense square matrix. Malformed rows are reported with
//! their line number. Floats are written with 17 significant digits so a
//! write/read cycle is exact.

use std::fs;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dpc::format_f64;
use crate::metric::{DistanceMatrix, MetricError, Parameter};
use crate::partition::Partition;
use crate::scoring::{SampleSet, ScoringError};

/// Errors raised by loading, parsing and splitting.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("format error at line {line}: {reason}")]
    FormatError { line: usize, reason: String },
    #[error("validation error: {0}")]
    ValidationError(#[from] MetricError),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

fn read_to_string(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_string(path: &Path, content: &str) -> Result<(), IoError> {
    fs::write(path, content).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn data_lines(text: &str, skip_header: bool) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line))
        .skip(usize::from(skip_header))
        .filter(|(_, line)| !line.trim().is_empty())
}

/// Loads partitions from CSV, one label vector per row. Rows must have equal
/// length and integer cells; partitions are canonicalized on load.
pub fn load_partition_csv(path: &Path, header: bool) -> Result<Vec<Partition>, IoError> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    let mut width: Option<usize> = None;
    for (line_no, line) in data_lines(&text, header) {
        let mut raw = Vec::new();
        for cell in line.split(',') {
            let value: i64 = cell.trim().parse().map_err(|_| IoError::FormatError {
                line: line_no,
                reason: format!("non-integer cell '{cell}'"),
            })?;
            raw.push(value);
        }
        match width {
            None => width = Some(raw.len()),
            Some(w) if w != raw.len() => {
                return Err(IoError::FormatError {
                    line: line_no,
                    reason: format!("row has {} cells, expected {}", raw.len(), w),
                })
            }
            _ => {}
        }
        out.push(Partition::canonicalize(&raw).map_err(|e| IoError::FormatError {
            line: line_no,
            reason: e.to_string(),
        })?);
    }
    if out.is_empty() {
        return Err(IoError::FormatError {
            line: 1,
            reason: "file holds no rows".to_string(),
        });
    }
    Ok(out)
}

/// Writes partitions as header-free CSV in canonical label form.
pub fn save_partition_csv(path: &Path, partitions: &[Partition]) -> Result<(), IoError> {
    let mut out = String::new();
    for p in partitions {
        let row: Vec<String> = p.labels().iter().map(|l| l.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_string(path, &out)
}

/// Loads real vectors from CSV, one vector per row, all rows equal length.
pub fn load_vector_csv(path: &Path, header: bool) -> Result<Vec<Vec<f64>>, IoError> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    let mut width: Option<usize> = None;
    for (line_no, line) in data_lines(&text, header) {
        let mut row = Vec::new();
        for cell in line.split(',') {
            let value: f64 = cell.trim().parse().map_err(|_| IoError::FormatError {
                line: line_no,
                reason: format!("non-numeric cell '{cell}'"),
            })?;
            if !value.is_finite() {
                return Err(IoError::FormatError {
                    line: line_no,
                    reason: format!("non-finite cell '{cell}'"),
                });
            }
            row.push(value);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(IoError::FormatError {
                    line: line_no,
                    reason: format!("row has {} cells, expected {}", row.len(), w),
                })
            }
            _ => {}
        }
        out.push(row);
    }
    if out.is_empty() {
        return Err(IoError::FormatError {
            line: 1,
            reason: "file holds no rows".to_string(),
        });
    }
    Ok(out)
}

/// Writes real vectors as header-free CSV with 17 significant digits.
pub fn save_vector_csv(path: &Path, vectors: &[Vec<f64>]) -> Result<(), IoError> {
    let mut out = String::new();
    for v in vectors {
        let row: Vec<String> = v.iter().map(|&x| format_f64(x)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_string(path, &out)
}

/// Loads a dense square distance matrix, validating symmetry (within 1e-12)
/// and a zero diagonal.
pub fn load_distance_csv(path: &Path, header: bool) -> Result<DistanceMatrix, IoError> {
    let rows = load_vector_csv(path, header)?;
    Ok(DistanceMatrix::from_rows(&rows)?)
}

/// Writes a distance matrix as header-free CSV with 17 significant digits.
pub fn save_distance_csv(path: &Path, matrix: &DistanceMatrix) -> Result<(), IoError> {
    let rows: Vec<Vec<f64>> = matrix.rows().map(|r| r.to_vec()).collect();
    save_vector_csv(path, &rows)
}

/// How to divide samples into training and calibration subsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitSpec {
    /// Prefix split preserving sample order (the right choice for thinned
    /// chain output).
    FirstS { s: usize },
    /// Seeded shuffle followed by a fractional split.
    Fraction { fraction: f64, seed: u64 },
}

/// Splits parameters into a [`SampleSet`].
pub fn split_samples(items: Vec<Parameter>, split: SplitSpec) -> Result<SampleSet, IoError> {
    let total = items.len();
    match split {
        SplitSpec::FirstS { s } => {
            if s < 1 || s >= total {
                return Err(IoError::InvalidSplit(format!(
                    "first_s = {s} must satisfy 1 <= s < {total}"
                )));
            }
            Ok(SampleSet::new(items, s)?)
        }
        SplitSpec::Fraction { fraction, seed } => {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(IoError::InvalidSplit(format!(
                    "fraction = {fraction} must lie in (0, 1)"
                )));
            }
            let s = (fraction * total as f64).floor() as usize;
            if s < 1 || s >= total {
                return Err(IoError::InvalidSplit(format!(
                    "fraction = {fraction} of {total} samples leaves an empty subset"
                )));
            }
            let mut shuffled = items;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            shuffled.shuffle(&mut rng);
            Ok(SampleSet::new(shuffled, s)?)
        }
    }
}

/// Appends one JSON record per line.
pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}
