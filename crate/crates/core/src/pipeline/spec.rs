//! Dataset specifiers for the command line and matrix files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::{self, Dataset};
use crate::error::{DacError, Result};
use crate::io_util::{read_file, write_file};
use crate::Matrix;

/// `idx:IMAGES,LABELS`, `hapt:FEATURES,LABELS[,TRAIN_FEATURES]` or `cache:PATH`.
///
/// For HAPT the optional third path names the training features whose
/// per-feature range normalizes this split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSpec {
    Idx {
        images: PathBuf,
        labels: PathBuf,
    },
    Hapt {
        features: PathBuf,
        labels: PathBuf,
        reference: Option<PathBuf>,
    },
    Cache(PathBuf),
}

impl FromStr for DataSpec {
    type Err = DacError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || DacError::InvalidArgument(format!("bad data spec {s:?}"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let parts: Vec<PathBuf> = rest.split(',').map(PathBuf::from).collect();
        match (kind, parts.as_slice()) {
            ("idx", [images, labels]) => Ok(DataSpec::Idx {
                images: images.clone(),
                labels: labels.clone(),
            }),
            ("hapt", [features, labels]) => Ok(DataSpec::Hapt {
                features: features.clone(),
                labels: labels.clone(),
                reference: None,
            }),
            ("hapt", [features, labels, reference]) => Ok(DataSpec::Hapt {
                features: features.clone(),
                labels: labels.clone(),
                reference: Some(reference.clone()),
            }),
            ("cache", [path]) => Ok(DataSpec::Cache(path.clone())),
            _ => Err(bad()),
        }
    }
}

impl DataSpec {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSpec::Idx { images, labels } => data::load_idx(images, labels),
            DataSpec::Hapt {
                features,
                labels,
                reference: None,
            } => data::load_hapt(features, labels),
            DataSpec::Hapt {
                features,
                labels,
                reference: Some(reference),
            } => {
                let range = data::hapt_feature_range(reference)?;
                data::load_hapt_with_range(features, labels, &range)
            }
            DataSpec::Cache(path) => Dataset::load_cache(path),
        }
    }
}

/// One comma-separated row per sample, shortest round-trip float formatting.
pub fn write_matrix_csv(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let mut out = String::with_capacity(m.len() * 20);
    for row in m.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v:?}").unwrap();
        }
        out.push('\n');
    }
    write_file(path.as_ref(), out.as_bytes())
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let text = String::from_utf8(read_file(path)?)
        .map_err(|_| DacError::format(path, "not valid UTF-8 text"))?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut n = 0;
        for tok in line.split(',') {
            let tok = tok.trim();
            values.push(tok.parse::<f64>().map_err(|_| DacError::NonNumericToken {
                path: path.to_path_buf(),
                line: i + 1,
                token: tok.to_string(),
            })?);
            n += 1;
        }
        match cols {
            None => cols = Some(n),
            Some(c) if c != n => {
                return Err(DacError::RaggedRow {
                    path: path.to_path_buf(),
                    line: i + 1,
                    expected: c,
                    found: n,
                })
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| DacError::format(path, "empty matrix file"))?;
    Ok(Matrix::from_shape_vec((rows, cols), values).unwrap())
}

/// Reads a CSV matrix, or a `DACD` cache file when the extension is not `.csv`.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "csv") {
        read_matrix_csv(path)
    } else {
        Ok(Dataset::load_cache(path)?.features)
    }
}
