//! K-Means: k-means++ seeding, Lloyd iterations and best-of-restarts.

use std::fmt::Write as _;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DacError, Result};
use crate::io_util::write_file;
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
    pub restarts: usize,
}

impl KMeansParams {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            seed: 0,
            max_iters: 300,
            tol: 1e-6,
            restarts: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub assignments: Vec<usize>,
    pub centroids: Matrix,
    pub wcss: f64,
    pub iterations_run: usize,
    /// Objective after each Lloyd update of the winning run.
    pub wcss_trace: Vec<f64>,
}

impl ClusteringResult {
    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    /// Recomputes the objective from `assignments` and `centroids`.
    pub fn recompute_wcss(&self, points: &Matrix) -> f64 {
        wcss(points, &self.centroids, &self.assignments)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_assignments_csv(path, &self.assignments)
    }
}

/// `index,cluster` header, then one line per sample.
pub fn write_assignments_csv(path: impl AsRef<Path>, assignments: &[usize]) -> Result<()> {
    let mut out = String::with_capacity(assignments.len() * 8 + 14);
    out.push_str("index,cluster\n");
    for (i, c) in assignments.iter().enumerate() {
        writeln!(out, "{i},{c}").unwrap();
    }
    write_file(path.as_ref(), out.as_bytes())
}

pub fn kmeans(points: &Matrix, k: usize, params: &KMeansParams) -> Result<ClusteringResult> {
    let s = points.nrows();
    if k == 0 {
        return Err(DacError::InvalidArgument("k must be positive".into()));
    }
    if s < k {
        return Err(DacError::InvalidArgument(format!(
            "{s} points cannot form {k} clusters"
        )));
    }
    if points.ncols() == 0 {
        return Err(DacError::InvalidArgument(
            "points have no dimensions".into(),
        ));
    }
    if !points.iter().all(|v| v.is_finite()) {
        return Err(DacError::NonFinite("k-means input"));
    }
    if params.restarts == 0 || params.max_iters == 0 || params.tol.is_nan() || params.tol < 0.0 {
        return Err(DacError::InvalidArgument(format!(
            "invalid k-means parameters {params:?}"
        )));
    }
    let points = points.as_standard_layout().into_owned();
    let mut master = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<ClusteringResult> = None;
    for _ in 0..params.restarts {
        let sub_seed: u64 = master.gen();
        let run = lloyd(&points, k, sub_seed, params);
        if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn row(m: &Matrix, i: usize) -> &[f64] {
    let d = m.ncols();
    &m.as_slice().unwrap()[i * d..(i + 1) * d]
}

fn seed_plus_plus(points: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let s = points.nrows();
    let mut centroids = Matrix::zeros((k, points.ncols()));
    let first = rng.gen_range(0..s);
    centroids.row_mut(0).assign(&points.row(first));
    let mut nearest: Vec<f64> = (0..s)
        .map(|i| sq_dist(row(points, i), row(points, first)))
        .collect();
    for c in 1..k {
        let pick = match WeightedIndex::new(&nearest) {
            Ok(dist) => dist.sample(rng),
            // Every point coincides with a chosen centroid.
            Err(_) => rng.gen_range(0..s),
        };
        centroids.row_mut(c).assign(&points.row(pick));
        for (i, n) in nearest.iter_mut().enumerate() {
            *n = n.min(sq_dist(row(points, i), row(points, pick)));
        }
    }
    centroids
}

/// Nearest centroid per point, ties to the lowest index. Returns the squared distances too.
fn assign(points: &Matrix, centroids: &Matrix, out: &mut [usize], dist: &mut [f64]) {
    let k = centroids.nrows();
    for i in 0..points.nrows() {
        let p = row(points, i);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for c in 0..k {
            let d = sq_dist(p, row(centroids, c));
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        out[i] = best;
        dist[i] = best_d;
    }
}

/// Moves the farthest point (from its own centroid) into each empty cluster.
fn repair_empty(assignments: &mut [usize], dist: &mut [f64], k: usize) {
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let donor = (0..assignments.len())
            .filter(|&i| sizes[assignments[i]] > 1)
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
        if let Some(i) = donor {
            sizes[assignments[i]] -= 1;
            assignments[i] = c;
            sizes[c] = 1;
            dist[i] = 0.0;
        }
    }
}

fn update_centroids(points: &Matrix, assignments: &[usize], centroids: &mut Matrix) {
    let (k, d) = centroids.dim();
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (i, &a) in assignments.iter().enumerate() {
        counts[a] += 1;
        for (s, x) in sums[a * d..(a + 1) * d].iter_mut().zip(row(points, i)) {
            *s += x;
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            continue;
        }
        let inv = counts[c] as f64;
        for (dst, s) in centroids
            .row_mut(c)
            .iter_mut()
            .zip(&sums[c * d..(c + 1) * d])
        {
            *dst = s / inv;
        }
    }
}

fn wcss(points: &Matrix, centroids: &Matrix, assignments: &[usize]) -> f64 {
    let points = points.as_standard_layout();
    let centroids = centroids.as_standard_layout();
    let d = points.ncols();
    let ps = points.as_slice().unwrap();
    let cs = centroids.as_slice().unwrap();
    assignments
        .iter()
        .enumerate()
        .map(|(i, &a)| sq_dist(&ps[i * d..(i + 1) * d], &cs[a * d..(a + 1) * d]))
        .sum()
}

fn lloyd(points: &Matrix, k: usize, seed: u64, params: &KMeansParams) -> ClusteringResult {
    let s = points.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_plus_plus(points, k, &mut rng);
    let mut assignments = vec![0usize; s];
    let mut dist = vec![0.0; s];
    let mut trace = Vec::new();
    let mut iterations_run = 0;

    for _ in 0..params.max_iters {
        assign(points, &centroids, &mut assignments, &mut dist);
        repair_empty(&mut assignments, &mut dist, k);
        let previous = centroids.clone();
        update_centroids(points, &assignments, &mut centroids);
        iterations_run += 1;
        trace.push(wcss(points, &centroids, &assignments));
        let shift = (0..k)
            .map(|c| sq_dist(row(&previous, c), row(&centroids, c)).sqrt())
            .fold(0.0, f64::max);
        if shift < params.tol {
            break;
        }
    }
    assign(points, &centroids, &mut assignments, &mut dist);
    let total = dist.iter().sum();
    ClusteringResult {
        assignments,
        centroids,
        wcss: total,
        iterations_run,
        wcss_trace: trace,
    }
}
