use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array1;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DacError, Result};
use crate::io_util::{dim_u32, put_f64s, put_u32, read_file, write_file, LeReader};
use crate::Matrix;

pub const WEIGHTS_MAGIC: &[u8; 4] = b"DACW";

/// Per-feature reconstruction weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWeights {
    values: Array1<f64>,
    /// Samples the estimate was computed from; 0 when unknown (e.g. loaded from file).
    pub m_used: usize,
}

/// Uniform, seeded subsampling of the pair sets, applied to each term separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairSampling {
    pub cap: usize,
    pub seed: u64,
}

impl FeatureWeights {
    pub fn new(values: Array1<f64>, m_used: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(DacError::InvalidArgument("empty feature weights".into()));
        }
        if !values.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(DacError::InvalidArgument(
                "feature weights must be finite and non-negative".into(),
            ));
        }
        Ok(Self { values, m_used })
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(Array1::from_elem(n, value), 0)
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.mean().unwrap_or(0.0)
    }

    /// Rescaled so the mean weight is 1. All-zero weights are returned unchanged.
    pub fn normalized_to_unit_mean(&self) -> Self {
        let mean = self.mean();
        if mean == 0.0 {
            return self.clone();
        }
        Self {
            values: &self.values / mean,
            m_used: self.m_used,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(8 + 8 * self.len());
        buf.extend_from_slice(WEIGHTS_MAGIC);
        put_u32(
            &mut buf,
            dim_u32(Path::new("<weights>"), "length", self.len()).unwrap(),
        );
        put_f64s(&mut buf, self.values.iter());
        buf
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = LeReader::new(path, bytes);
        r.magic(WEIGHTS_MAGIC)?;
        let n = r.u32()? as usize;
        let values = r.f64s(n)?;
        r.finish()?;
        Self::new(Array1::from_vec(values), 0).map_err(|e| DacError::format(path, e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&read_file(path)?, path)
    }
}

/// Estimates one weight per column of `samples` from its labels.
///
/// Pairs are unordered with `p < q`. With `sampling`, each of the two pair
/// sets is reduced to at most `cap` pairs drawn uniformly without replacement.
pub fn compute_feature_weights(
    samples: &Matrix,
    labels: &[usize],
    sampling: Option<PairSampling>,
) -> Result<FeatureWeights> {
    let m = samples.nrows();
    let n = samples.ncols();
    if labels.len() != m {
        return Err(DacError::DimensionMismatch {
            context: "weight-estimation labels",
            expected: m,
            found: labels.len(),
        });
    }
    if m < 2 {
        return Err(DacError::InvalidArgument(format!(
            "feature weights need at least 2 samples, got {m}"
        )));
    }
    if n == 0 {
        return Err(DacError::InvalidArgument("samples have no features".into()));
    }
    if !samples.iter().all(|v| v.is_finite()) {
        return Err(DacError::NonFinite("weight-estimation samples"));
    }
    let mut class_sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *class_sizes.entry(l).or_default() += 1;
    }
    if class_sizes.len() < 2 {
        return Err(DacError::InvalidArgument(
            "feature weights need at least two distinct labels".into(),
        ));
    }
    if class_sizes.values().all(|&c| c < 2) {
        return Err(DacError::InvalidArgument(
            "feature weights need at least one same-label pair".into(),
        ));
    }
    if let Some(s) = sampling {
        if s.cap == 0 {
            return Err(DacError::InvalidArgument(
                "pair cap must be positive".into(),
            ));
        }
    }

    let owned;
    let samples = if samples.is_standard_layout() {
        samples
    } else {
        owned = samples.as_standard_layout().into_owned();
        &owned
    };
    let row = |k: usize| samples.row(k).to_slice().unwrap();

    let mut same = vec![0.0; n];
    let mut diff = vec![0.0; n];
    let (same_count, diff_count);

    match sampling {
        None => {
            let (mut sc, mut dc) = (0usize, 0usize);
            for p in 0..m {
                for q in (p + 1)..m {
                    if labels[p] == labels[q] {
                        accumulate_similarity(&mut same, row(p), row(q));
                        sc += 1;
                    } else {
                        accumulate_dissimilarity(&mut diff, row(p), row(q));
                        dc += 1;
                    }
                }
            }
            same_count = sc;
            diff_count = dc;
        }
        Some(s) => {
            let mut same_pairs = Vec::new();
            let mut diff_pairs = Vec::new();
            for p in 0..m as u32 {
                for q in (p + 1)..m as u32 {
                    if labels[p as usize] == labels[q as usize] {
                        same_pairs.push((p, q));
                    } else {
                        diff_pairs.push((p, q));
                    }
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            let same_pairs = subsample_pairs(same_pairs, s.cap, &mut rng);
            let diff_pairs = subsample_pairs(diff_pairs, s.cap, &mut rng);
            for &(p, q) in &same_pairs {
                accumulate_similarity(&mut same, row(p as usize), row(q as usize));
            }
            for &(p, q) in &diff_pairs {
                accumulate_dissimilarity(&mut diff, row(p as usize), row(q as usize));
            }
            same_count = same_pairs.len();
            diff_count = diff_pairs.len();
        }
    }

    let values = Array1::from_iter(
        same.iter()
            .zip(&diff)
            .map(|(s, d)| (s / same_count as f64) * (d / diff_count as f64)),
    );
    FeatureWeights::new(values, m)
}

fn subsample_pairs(pairs: Vec<(u32, u32)>, cap: usize, rng: &mut ChaCha8Rng) -> Vec<(u32, u32)> {
    if pairs.len() <= cap {
        return pairs;
    }
    let mut picked = index::sample(rng, pairs.len(), cap).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| pairs[i]).collect()
}

#[inline]
fn gaussian_similarity(a: f64, b: f64) -> f64 {
    let d = a - b;
    if d == 0.0 {
        1.0
    } else {
        (-d * d).exp()
    }
}

fn accumulate_similarity(acc: &mut [f64], a: &[f64], b: &[f64]) {
    for ((s, x), y) in acc.iter_mut().zip(a).zip(b) {
        *s += gaussian_similarity(*x, *y);
    }
}

fn accumulate_dissimilarity(acc: &mut [f64], a: &[f64], b: &[f64]) {
    for ((s, x), y) in acc.iter_mut().zip(a).zip(b) {
        *s += 1.0 - gaussian_similarity(*x, *y);
    }
}
