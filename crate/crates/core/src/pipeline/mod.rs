//! End-to-end runs: weight estimation, autoencoder training, encoding,
//! K-Means on raw features and on codes, ARI evaluation and reporting.
//!
//! Training is label-supervised through the feature weights: the labels of
//! the training split shape the reconstruction objective. Evaluation clusters
//! the held-out test split, whose labels are only used for scoring.

mod config;
mod export;
mod report;
mod spec;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cluster::kmeans;
use crate::data::{self, Dataset};
use crate::error::{DacError, Result};
use crate::io_util::{read_file, write_file};
use crate::loss::{compute_feature_weights, objective_gradients, FeatureWeights};
use crate::metrics::adjusted_rand_index;
use crate::nn::Autoencoder;
use crate::optim::{adam_step, AdamState};
use crate::Matrix;

pub use config::{DatasetKind, RunConfig};
pub use export::{export_reconstructions, export_weight_map, write_pgm};
pub use report::{RunReport, Timings};
pub use spec::{read_matrix, read_matrix_csv, write_matrix_csv, DataSpec};

/// Independent random streams derived from the configured seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStream {
    TrainSubset = 1,
    TestSubset = 2,
    WeightSample = 3,
    PairCap = 4,
    Shuffle = 5,
}

/// SplitMix64 finalizer over `(base, stream, index)`.
pub fn derive_seed(base: u64, stream: SeedStream, index: u64) -> u64 {
    let mut z = base
        ^ (stream as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xD1B5_4A32_D192_ED69);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// File locations of one run's artifacts.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn model(&self) -> PathBuf {
        self.dir.join("model.dacm")
    }

    pub fn weights(&self) -> PathBuf {
        self.dir.join("weights.dacw")
    }

    pub fn loss_trace(&self) -> PathBuf {
        self.dir.join("loss_trace.csv")
    }

    pub fn config(&self) -> PathBuf {
        self.dir.join("config.txt")
    }

    pub fn report_text(&self) -> PathBuf {
        self.dir.join("report.txt")
    }

    pub fn report_json(&self) -> PathBuf {
        self.dir.join("report.json")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub mean_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Autoencoder,
    pub weights: FeatureWeights,
    /// Mean per-sample total loss of each epoch.
    pub loss_trace: Vec<f64>,
    pub train_secs: f64,
}

fn limit(ds: Dataset, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || n >= ds.len() {
        Ok(ds)
    } else {
        ds.subsample(n, seed)
    }
}

fn check_unit_range(ds: &Dataset) -> Result<()> {
    if ds.is_unit_range() {
        Ok(())
    } else {
        Err(DacError::InvalidArgument(format!(
            "dataset {} has features outside [0, 1]",
            ds.name
        )))
    }
}

/// Training split, limited to `train_limit` seeded samples.
pub fn load_train(config: &RunConfig) -> Result<Dataset> {
    let mut ds = match config.dataset_kind {
        DatasetKind::Idx => data::load_idx(&config.train_features, &config.train_labels)?,
        DatasetKind::Hapt => data::load_hapt(&config.train_features, &config.train_labels)?,
    };
    ds.name = format!("{}-train", config.dataset_name);
    check_unit_range(&ds)?;
    limit(
        ds,
        config.train_limit,
        derive_seed(config.sampling_seed, SeedStream::TrainSubset, 0),
    )
}

/// Test split, normalized with the full training split's range when per-feature.
pub fn load_test(config: &RunConfig) -> Result<Dataset> {
    let mut ds = match config.dataset_kind {
        DatasetKind::Idx => data::load_idx(&config.test_features, &config.test_labels)?,
        DatasetKind::Hapt => {
            let range = data::hapt_feature_range(&config.train_features)?;
            data::load_hapt_with_range(&config.test_features, &config.test_labels, &range)?
        }
    };
    ds.name = format!("{}-test", config.dataset_name);
    check_unit_range(&ds)?;
    limit(
        ds,
        config.test_limit,
        derive_seed(config.sampling_seed, SeedStream::TestSubset, 0),
    )
}

/// Feature weights from `min(weight_samples, len)` seeded training samples.
pub fn estimate_weights(train: &Dataset, config: &RunConfig) -> Result<FeatureWeights> {
    let m = config.weight_samples.min(train.len());
    let subset = train.subsample(
        m,
        derive_seed(config.sampling_seed, SeedStream::WeightSample, 0),
    )?;
    let w = compute_feature_weights(&subset.features, subset.labels()?, config.pair_sampling())?;
    Ok(if config.normalize_weights {
        w.normalized_to_unit_mean()
    } else {
        w
    })
}

/// Trains on an in-memory split; nothing is written to disk.
pub fn train_on(
    train: &Dataset,
    config: &RunConfig,
    mut progress: Option<&mut dyn FnMut(EpochStats)>,
) -> Result<TrainOutcome> {
    config.validate()?;
    let start = Instant::now();
    if train.dim() != config.encoder_widths[0] {
        return Err(DacError::DimensionMismatch {
            context: "training features",
            expected: config.encoder_widths[0],
            found: train.dim(),
        });
    }
    let weights = estimate_weights(train, config)?;
    let mut model = Autoencoder::init(
        &config.encoder_widths,
        &config.decoder_widths,
        config.model_seed,
    )?;
    let mut state = AdamState::new(&model, config.adam())?;
    let schedule = config.schedule();

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let lr = schedule.lr_at(epoch);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            config.sampling_seed,
            SeedStream::Shuffle,
            epoch as u64,
        ));
        order.sort_unstable();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (batch_idx, rows) in order.chunks(config.batch_size).enumerate() {
            let batch = train.features.select(ndarray::Axis(0), rows);
            let (report, grads) = objective_gradients(&model, &batch, &weights, config.beta)?;
            if !report.total.is_finite() || !grads.is_finite() {
                return Err(DacError::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            adam_step(&mut model, &grads, &mut state, lr)?;
            loss_sum += report.total * rows.len() as f64;
        }
        let mean_loss = loss_sum / train.len() as f64;
        trace.push(mean_loss);
        if let Some(cb) = progress.as_deref_mut() {
            cb(EpochStats {
                epoch,
                lr,
                mean_loss,
            });
        }
    }
    Ok(TrainOutcome {
        model,
        weights,
        loss_trace: trace,
        train_secs: start.elapsed().as_secs_f64(),
    })
}

/// Loads the training split, trains, and persists model, weights, loss trace and config.
pub fn train(
    config: &RunConfig,
    progress: Option<&mut dyn FnMut(EpochStats)>,
) -> Result<TrainOutcome> {
    let train = load_train(config)?;
    let outcome = train_on(&train, config, progress)?;
    let art = Artifacts::new(&config.output_dir);
    outcome.model.save(art.model())?;
    outcome.weights.save(art.weights())?;
    write_loss_trace(&art.loss_trace(), &outcome.loss_trace)?;
    config.save(art.config())?;
    Ok(outcome)
}

pub fn write_loss_trace(path: &Path, trace: &[f64]) -> Result<()> {
    let mut out = String::from("epoch,loss\n");
    for (i, v) in trace.iter().enumerate() {
        out.push_str(&format!("{i},{v:?}\n"));
    }
    write_file(path, out.as_bytes())
}

pub fn read_loss_trace(path: &Path) -> Result<Vec<f64>> {
    let text = String::from_utf8(read_file(path)?)
        .map_err(|_| DacError::format(path, "loss trace is not UTF-8"))?;
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_once(',')
                .and_then(|(_, v)| v.trim().parse().ok())
                .ok_or_else(|| DacError::format(path, format!("bad loss trace line {l:?}")))
        })
        .collect()
}

/// Encoder outputs for every sample, in fixed-size chunks.
pub fn encode_dataset(model: &Autoencoder, ds: &Dataset) -> Result<Matrix> {
    if ds.dim() != model.input_dim() {
        return Err(DacError::DimensionMismatch {
            context: "dataset features",
            expected: model.input_dim(),
            found: ds.dim(),
        });
    }
    const CHUNK: usize = 1024;
    let mut out = Matrix::zeros((ds.len(), model.code_dim()));
    for start in (0..ds.len()).step_by(CHUNK) {
        let end = (start + CHUNK).min(ds.len());
        let part = ds.features.slice(ndarray::s![start..end, ..]).to_owned();
        out.slice_mut(ndarray::s![start..end, ..])
            .assign(&model.encode(&part)?);
    }
    Ok(out)
}

fn require(path: PathBuf) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(DacError::MissingArtifact(path))
    }
}

/// Clusters an in-memory test split with both feature sets and scores them.
pub fn evaluate_on(
    model: &Autoencoder,
    test: &Dataset,
    loss_trace: Vec<f64>,
    config: &RunConfig,
) -> Result<RunReport> {
    let truth = test.labels()?;
    let classes = test.class_count();
    if classes != config.k {
        return Err(DacError::InvalidArgument(format!(
            "k = {} but the test labels contain {classes} classes",
            config.k
        )));
    }
    let params = config.kmeans_params();

    let t = Instant::now();
    let raw = kmeans(&test.features, config.k, &params)?;
    let kmeans_raw_secs = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let codes = encode_dataset(model, test)?;
    let encode_secs = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let dac = kmeans(&codes, config.k, &params)?;
    let kmeans_dac_secs = t.elapsed().as_secs_f64();

    let ari_raw = adjusted_rand_index(&raw.assignments, truth)?;
    let ari_dac = adjusted_rand_index(&dac.assignments, truth)?;
    Ok(RunReport::new(
        config,
        test.len(),
        ari_raw,
        ari_dac,
        raw.wcss,
        dac.wcss,
        loss_trace,
        Timings {
            train_secs: None,
            encode_secs,
            kmeans_raw_secs,
            kmeans_dac_secs,
        },
    ))
}

/// Evaluates persisted artifacts on the configured test split and writes both reports.
pub fn evaluate(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let art = Artifacts::new(&config.output_dir);
    let model = Autoencoder::load(require(art.model())?)?;
    let trace = read_loss_trace(&require(art.loss_trace())?)?;
    let test = load_test(config)?;
    let report = evaluate_on(&model, &test, trace, config)?;
    report.write(&art)?;
    Ok(report)
}

/// Trains when no model artifact exists yet, then evaluates.
pub fn run(config: &RunConfig, progress: Option<&mut dyn FnMut(EpochStats)>) -> Result<RunReport> {
    let art = Artifacts::new(&config.output_dir);
    let mut train_secs = None;
    if !art.model().exists() || !art.loss_trace().exists() {
        train_secs = Some(train(config, progress)?.train_secs);
    }
    let mut report = evaluate(config)?;
    if train_secs.is_some() {
        report.timings.train_secs = train_secs;
        report.write(&art)?;
    }
    Ok(report)
}
