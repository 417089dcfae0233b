//! Dataset ingestion: IDX image files, HAPT text files and the `DACD` cache.
//!
//! Every loader returns features normalized into `[0, 1]`. IDX pixels are
//! divided by 255. HAPT features are min-max scaled per column, using the
//! training split's range for both splits.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use ndarray::Axis;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DacError, Result};
use crate::io_util::{dim_u32, put_f64s, put_u32, read_file, write_file, LeReader};
use crate::Matrix;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
pub const CACHE_MAGIC: &[u8; 4] = b"DACD";
pub const HAPT_CLASSES: i64 = 12;

/// Per-column min and max of a reference split.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRange {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl FeatureRange {
    pub fn of(features: &Matrix) -> Self {
        let min = features
            .axis_iter(Axis(1))
            .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
            .collect();
        let max = features
            .axis_iter(Axis(1))
            .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        Self { min, max }
    }

    /// Scales each column into `[0, 1]`; zero-range columns map to 0 and
    /// values outside the reference range are clamped.
    pub fn apply(&self, features: &mut Matrix) -> Result<()> {
        if features.ncols() != self.min.len() {
            return Err(DacError::DimensionMismatch {
                context: "feature range",
                expected: self.min.len(),
                found: features.ncols(),
            });
        }
        for mut row in features.rows_mut() {
            for ((v, &lo), &hi) in row.iter_mut().zip(&self.min).zip(&self.max) {
                let span = hi - lo;
                *v = if span > 0.0 {
                    ((*v - lo) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                };
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Normalization {
    None,
    MinMaxGlobal,
    MinMaxPerFeature(FeatureRange),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Matrix,
    pub labels: Option<Vec<usize>>,
    pub normalization: Normalization,
    /// `(rows, cols)` for image datasets.
    pub image_shape: Option<(usize, usize)>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Matrix,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != features.nrows() {
                return Err(DacError::RowCountMismatch {
                    features: features.nrows(),
                    labels: l.len(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            features,
            labels,
            normalization: Normalization::None,
            image_shape: None,
        })
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn labels(&self) -> Result<&[usize]> {
        self.labels.as_deref().ok_or_else(|| {
            DacError::InvalidArgument(format!("dataset {} has no labels", self.name))
        })
    }

    pub fn class_count(&self) -> usize {
        self.labels
            .as_ref()
            .map_or(0, |l| l.iter().collect::<BTreeSet<_>>().len())
    }

    /// Side length when features form a square image.
    pub fn square_side(&self) -> Option<usize> {
        match self.image_shape {
            Some((r, c)) if r == c => Some(r),
            Some(_) => None,
            None => {
                let side = (self.dim() as f64).sqrt().round() as usize;
                (side * side == self.dim()).then_some(side)
            }
        }
    }

    pub fn is_unit_range(&self) -> bool {
        self.features.iter().all(|v| (0.0..=1.0).contains(v))
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            features: self.features.select(Axis(0), indices),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            normalization: self.normalization.clone(),
            image_shape: self.image_shape,
        }
    }

    /// Uniform sample of `m` rows without replacement, in sampled order.
    pub fn subsample(&self, m: usize, seed: u64) -> Result<Self> {
        if m == 0 || m > self.len() {
            return Err(DacError::InvalidArgument(format!(
                "cannot draw {m} samples from {} rows",
                self.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picked = index::sample(&mut rng, self.len(), m).into_vec();
        Ok(self.select(&picked))
    }

    pub fn cache_bytes(&self) -> Result<Vec<u8>> {
        let path = Path::new("<dataset>");
        let mut buf = Vec::with_capacity(12 + self.features.len() * 8 + self.len() * 4);
        buf.extend_from_slice(CACHE_MAGIC);
        put_u32(&mut buf, dim_u32(path, "rows", self.len())?);
        put_u32(&mut buf, dim_u32(path, "cols", self.dim())?);
        put_f64s(&mut buf, self.features.as_standard_layout().iter());
        if let Some(labels) = &self.labels {
            for &l in labels {
                let l = i32::try_from(l)
                    .map_err(|_| DacError::format(path, format!("label {l} exceeds i32")))?;
                buf.extend_from_slice(&l.to_le_bytes());
            }
        }
        Ok(buf)
    }

    pub fn save_cache(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.cache_bytes()?)
    }

    /// Reads a `DACD` file; labels are present when the payload has room for them.
    pub fn load_cache(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = read_file(path)?;
        let mut r = LeReader::new(path, &bytes);
        r.magic(CACHE_MAGIC)?;
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let values = r.f64s(rows * cols)?;
        let labels = match r.remaining() {
            0 => None,
            n if n == rows * 4 => {
                let mut out = Vec::with_capacity(rows);
                for _ in 0..rows {
                    let l = r.i32()?;
                    out.push(
                        usize::try_from(l)
                            .map_err(|_| DacError::format(path, format!("negative label {l}")))?,
                    );
                }
                Some(out)
            }
            n => {
                return Err(DacError::format(
                    path,
                    format!("{n} trailing bytes do not form {rows} labels"),
                ))
            }
        };
        r.finish()?;
        let features = Matrix::from_shape_vec((rows, cols), values)
            .map_err(|e| DacError::format(path, e.to_string()))?;
        let name = path
            .file_stem()
            .map_or_else(|| "cache".to_string(), |s| s.to_string_lossy().into_owned());
        Dataset::new(name, features, labels)
    }
}

struct BeCursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BeCursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.pos;
        if available < n {
            return Err(DacError::IdxTruncated {
                path: self.path.to_path_buf(),
                offset: self.pos as u64,
                needed: n as u64,
                available: available as u64,
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let offset = self.pos as u64;
        let found = self.u32()?;
        if found != expected {
            return Err(DacError::IdxBadMagic {
                path: self.path.to_path_buf(),
                offset,
                expected,
                found,
            });
        }
        Ok(())
    }
}

/// Parses an IDX image file; returns (count, rows, cols, pixels).
pub fn parse_idx_images(path: &Path, bytes: &[u8]) -> Result<(usize, usize, usize, Vec<u8>)> {
    let mut c = BeCursor {
        path,
        bytes,
        pos: 0,
    };
    c.magic(IDX_IMAGES_MAGIC)?;
    let n = c.u32()? as usize;
    let rows = c.u32()? as usize;
    let cols = c.u32()? as usize;
    let pixels = c.take(n * rows * cols)?.to_vec();
    Ok((n, rows, cols, pixels))
}

pub fn parse_idx_labels(path: &Path, bytes: &[u8]) -> Result<Vec<u8>> {
    let mut c = BeCursor {
        path,
        bytes,
        pos: 0,
    };
    c.magic(IDX_LABELS_MAGIC)?;
    let n = c.u32()? as usize;
    Ok(c.take(n)?.to_vec())
}

/// Loads an IDX image/label pair; pixel bytes map to `value / 255`.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let (n, rows, cols, pixels) = parse_idx_images(ip, &read_file(ip)?)?;
    let labels = parse_idx_labels(lp, &read_file(lp)?)?;
    if labels.len() != n {
        return Err(DacError::IdxCountMismatch {
            images: n,
            labels: labels.len(),
        });
    }
    let features = Matrix::from_shape_vec(
        (n, rows * cols),
        pixels.iter().map(|&b| b as f64 / 255.0).collect(),
    )
    .expect("pixel count checked by parser");
    let name = ip
        .file_name()
        .map_or_else(|| "idx".to_string(), |s| s.to_string_lossy().into_owned());
    let mut ds = Dataset::new(
        name,
        features,
        Some(labels.into_iter().map(usize::from).collect()),
    )?;
    ds.normalization = Normalization::MinMaxGlobal;
    ds.image_shape = Some((rows, cols));
    Ok(ds)
}

fn parse_feature_text(path: &Path) -> Result<Matrix> {
    let text = String::from_utf8(read_file(path)?)
        .map_err(|_| DacError::format(path, "not valid UTF-8 text"))?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| DacError::NonNumericToken {
                path: path.to_path_buf(),
                line: i + 1,
                token: tok.to_string(),
            })?;
            if !v.is_finite() {
                return Err(DacError::NonNumericToken {
                    path: path.to_path_buf(),
                    line: i + 1,
                    token: tok.to_string(),
                });
            }
            values.push(v);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(DacError::RaggedRow {
                    path: path.to_path_buf(),
                    line: i + 1,
                    expected: c,
                    found: count,
                })
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| DacError::format(path, "no feature rows"))?;
    Ok(Matrix::from_shape_vec((rows, cols), values).unwrap())
}

fn parse_hapt_labels(path: &Path) -> Result<Vec<usize>> {
    let text = String::from_utf8(read_file(path)?)
        .map_err(|_| DacError::format(path, "not valid UTF-8 text"))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        let label: i64 = tok.parse().map_err(|_| DacError::NonNumericToken {
            path: path.to_path_buf(),
            line: i + 1,
            token: tok.to_string(),
        })?;
        if !(1..=HAPT_CLASSES).contains(&label) {
            return Err(DacError::LabelOutOfRange {
                path: path.to_path_buf(),
                line: i + 1,
                label,
                max: HAPT_CLASSES,
            });
        }
        out.push((label - 1) as usize);
    }
    Ok(out)
}

/// Loads a HAPT split normalized with its own per-feature range (use for training data).
pub fn load_hapt(
    features_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<Dataset> {
    load_hapt_inner(features_path.as_ref(), labels_path.as_ref(), None)
}

/// Loads a HAPT split normalized with a reference range, normally the training split's.
pub fn load_hapt_with_range(
    features_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    range: &FeatureRange,
) -> Result<Dataset> {
    load_hapt_inner(features_path.as_ref(), labels_path.as_ref(), Some(range))
}

fn load_hapt_inner(fp: &Path, lp: &Path, range: Option<&FeatureRange>) -> Result<Dataset> {
    let mut features = parse_feature_text(fp)?;
    let labels = parse_hapt_labels(lp)?;
    if labels.len() != features.nrows() {
        return Err(DacError::RowCountMismatch {
            features: features.nrows(),
            labels: labels.len(),
        });
    }
    let range = range
        .cloned()
        .unwrap_or_else(|| FeatureRange::of(&features));
    range.apply(&mut features)?;
    let name = fp
        .file_stem()
        .map_or_else(|| "hapt".to_string(), |s| s.to_string_lossy().into_owned());
    let mut ds = Dataset::new(name, features, Some(labels))?;
    ds.normalization = Normalization::MinMaxPerFeature(range);
    Ok(ds)
}

/// Per-feature range of a raw HAPT feature file, for normalizing another split.
pub fn hapt_feature_range(features_path: impl AsRef<Path>) -> Result<FeatureRange> {
    Ok(FeatureRange::of(&parse_feature_text(
        features_path.as_ref(),
    )?))
}

/// Standard file locations inside an extracted HAPT archive.
pub fn hapt_paths(root: &Path, split: &str) -> (PathBuf, PathBuf) {
    let dir = if split == "train" { "Train" } else { "Test" };
    (
        root.join(dir).join(format!("X_{split}.txt")),
        root.join(dir).join(format!("y_{split}.txt")),
    )
}

/// Standard file names of an MNIST-style directory.
pub fn idx_paths(root: &Path, split: &str) -> (PathBuf, PathBuf) {
    let prefix = if split == "train" { "train" } else { "t10k" };
    (
        root.join(format!("{prefix}-images-idx3-ubyte")),
        root.join(format!("{prefix}-labels-idx1-ubyte")),
    )
}

#[cfg(test)]
mod tests;
