//! Adjusted Rand Index over a contingency table.

use std::collections::BTreeMap;

use crate::error::{DacError, Result};

/// Counts of samples per (predicted cluster, true class) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    (labels.iter().map(|l| ids[l]).collect(), ids.len())
}

#[inline]
fn pairs(n: u64) -> u128 {
    let n = n as u128;
    n * n.saturating_sub(1) / 2
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(DacError::DimensionMismatch {
                context: "label vectors",
                expected: truth.len(),
                found: pred.len(),
            });
        }
        if pred.is_empty() {
            return Err(DacError::InvalidArgument("empty label vectors".into()));
        }
        let (p, rows) = dense_ids(pred);
        let (t, cols) = dense_ids(truth);
        let mut counts = vec![vec![0u64; cols]; rows];
        for (&i, &j) in p.iter().zip(&t) {
            counts[i][j] += 1;
        }
        let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums = (0..cols)
            .map(|j| counts.iter().map(|r| r[j]).sum())
            .collect();
        Ok(Self {
            counts,
            row_sums,
            col_sums,
            total: pred.len() as u64,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// True when every row and every column has exactly one non-zero cell.
    fn is_bijective(&self) -> bool {
        self.row_sums.len() == self.col_sums.len()
            && self
                .counts
                .iter()
                .all(|r| r.iter().filter(|&&c| c > 0).count() == 1)
    }

    pub fn adjusted_rand_index(&self) -> f64 {
        let index: u128 = self.counts.iter().flatten().map(|&c| pairs(c)).sum();
        let sum_a: u128 = self.row_sums.iter().map(|&c| pairs(c)).sum();
        let sum_b: u128 = self.col_sums.iter().map(|&c| pairs(c)).sum();
        let n_pairs = pairs(self.total);
        // (index - E) / (M - E) with E = a·b / N and M = (a + b) / 2, scaled by 2N.
        let num = 2 * (index as i128 * n_pairs as i128 - (sum_a * sum_b) as i128);
        let den = (sum_a + sum_b) as i128 * n_pairs as i128 - 2 * (sum_a * sum_b) as i128;
        if den == 0 {
            return if self.is_bijective() { 1.0 } else { 0.0 };
        }
        num as f64 / den as f64
    }
}

/// Chance-adjusted pair-counting agreement in `[-1, 1]`; 1 for identical partitions.
pub fn adjusted_rand_index(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() < 2 {
        return Err(DacError::InvalidArgument(format!(
            "ARI needs at least 2 samples, got {}",
            pred.len()
        )));
    }
    Ok(ContingencyTable::new(pred, truth)?.adjusted_rand_index())
}
