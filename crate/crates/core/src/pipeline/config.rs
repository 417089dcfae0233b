//! Run configuration in a flat `key = value` text format.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma
//! separated. Every key is optional and falls back to its default, but
//! unknown or repeated keys are rejected.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cluster::KMeansParams;
use crate::error::{DacError, Result};
use crate::io_util::{read_file, write_file};
use crate::loss::PairSampling;
use crate::optim::{AdamParams, DecayKind, LrSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    /// IDX image/label pairs (MNIST, Fashion-MNIST).
    Idx,
    /// HAPT whitespace-separated feature and label text files.
    Hapt,
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Idx => "idx",
            DatasetKind::Hapt => "hapt",
        })
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "idx" => Ok(DatasetKind::Idx),
            "hapt" => Ok(DatasetKind::Hapt),
            other => Err(format!(
                "unknown dataset kind {other:?} (expected idx or hapt)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset_name: String,
    pub dataset_kind: DatasetKind,
    pub train_features: PathBuf,
    pub train_labels: PathBuf,
    pub test_features: PathBuf,
    pub test_labels: PathBuf,
    /// Seeded subset sizes; 0 keeps the whole split.
    pub train_limit: usize,
    pub test_limit: usize,

    pub encoder_widths: Vec<usize>,
    pub decoder_widths: Vec<usize>,
    pub code_dim: usize,

    pub epochs: usize,
    pub batch_size: usize,
    pub lr_initial: f64,
    pub lr_step_epochs: usize,
    pub lr_decay_factor: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub beta: f64,

    pub weight_samples: usize,
    /// Per-term pair cap for weight estimation; 0 uses every pair.
    pub pair_cap: usize,
    pub normalize_weights: bool,

    pub k: usize,
    pub kmeans_restarts: usize,
    pub kmeans_max_iters: usize,
    pub kmeans_tol: f64,

    pub model_seed: u64,
    pub sampling_seed: u64,
    pub kmeans_seed: u64,

    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::mnist("data/mnist")
    }
}

impl RunConfig {
    /// MNIST-style IDX layout under `dir` with the 784-500-200-50-10 architecture.
    pub fn mnist(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        let (train_features, train_labels) = crate::data::idx_paths(dir, "train");
        let (test_features, test_labels) = crate::data::idx_paths(dir, "test");
        Self {
            dataset_name: "mnist".into(),
            dataset_kind: DatasetKind::Idx,
            train_features,
            train_labels,
            test_features,
            test_labels,
            train_limit: 0,
            test_limit: 0,
            encoder_widths: vec![784, 500, 200, 50, 10],
            decoder_widths: vec![10, 50, 200, 500, 784],
            code_dim: 10,
            epochs: 200,
            batch_size: 256,
            lr_initial: 0.003,
            lr_step_epochs: 50,
            lr_decay_factor: 0.5,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            beta: 1e-5,
            weight_samples: 1000,
            pair_cap: 0,
            normalize_weights: false,
            k: 10,
            kmeans_restarts: 10,
            kmeans_max_iters: 300,
            kmeans_tol: 1e-6,
            model_seed: 42,
            sampling_seed: 7,
            kmeans_seed: 13,
            output_dir: PathBuf::from("runs/mnist"),
        }
    }

    /// Extracted HAPT archive under `dir` with the 561-300-100-30-12 architecture.
    pub fn hapt(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        let (train_features, train_labels) = crate::data::hapt_paths(dir, "train");
        let (test_features, test_labels) = crate::data::hapt_paths(dir, "test");
        Self {
            dataset_name: "hapt".into(),
            dataset_kind: DatasetKind::Hapt,
            train_features,
            train_labels,
            test_features,
            test_labels,
            encoder_widths: vec![561, 300, 100, 30, 12],
            decoder_widths: vec![12, 30, 100, 300, 561],
            code_dim: 12,
            k: 12,
            output_dir: PathBuf::from("runs/hapt"),
            ..Self::mnist(dir)
        }
    }

    pub fn schedule(&self) -> LrSchedule {
        LrSchedule {
            initial_lr: self.lr_initial,
            decay_kind: DecayKind::Step,
            step_size_epochs: self.lr_step_epochs,
            decay_factor: self.lr_decay_factor,
        }
    }

    pub fn adam(&self) -> AdamParams {
        AdamParams {
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }

    pub fn kmeans_params(&self) -> KMeansParams {
        KMeansParams {
            seed: self.kmeans_seed,
            max_iters: self.kmeans_max_iters,
            tol: self.kmeans_tol,
            restarts: self.kmeans_restarts,
        }
    }

    pub fn pair_sampling(&self) -> Option<PairSampling> {
        (self.pair_cap > 0).then(|| PairSampling {
            cap: self.pair_cap,
            seed: super::derive_seed(self.sampling_seed, super::SeedStream::PairCap, 0),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(DacError::Config { line: 0, reason });
        if self.encoder_widths.last() != Some(&self.code_dim) {
            return bad(format!(
                "code_dim {} does not match the last encoder width",
                self.code_dim
            ));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if self.weight_samples < 2 {
            return bad("weight_samples must be at least 2".into());
        }
        if self.beta.is_nan() || self.beta < 0.0 {
            return bad("beta must be non-negative".into());
        }
        self.schedule()
            .validate()
            .and_then(|_| self.adam().validate())
            .map_err(|e| DacError::Config {
                line: 0,
                reason: e.to_string(),
            })
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let list = |v: &[usize]| {
            v.iter()
                .map(|w| w.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let path = |p: &Path| p.display().to_string();
        vec![
            ("dataset_name", self.dataset_name.clone()),
            ("dataset_kind", self.dataset_kind.to_string()),
            ("train_features", path(&self.train_features)),
            ("train_labels", path(&self.train_labels)),
            ("test_features", path(&self.test_features)),
            ("test_labels", path(&self.test_labels)),
            ("train_limit", self.train_limit.to_string()),
            ("test_limit", self.test_limit.to_string()),
            ("encoder_widths", list(&self.encoder_widths)),
            ("decoder_widths", list(&self.decoder_widths)),
            ("code_dim", self.code_dim.to_string()),
            ("epochs", self.epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("lr_initial", format!("{:?}", self.lr_initial)),
            ("lr_step_epochs", self.lr_step_epochs.to_string()),
            ("lr_decay_factor", format!("{:?}", self.lr_decay_factor)),
            ("adam_beta1", format!("{:?}", self.adam_beta1)),
            ("adam_beta2", format!("{:?}", self.adam_beta2)),
            ("adam_epsilon", format!("{:?}", self.adam_epsilon)),
            ("beta", format!("{:?}", self.beta)),
            ("weight_samples", self.weight_samples.to_string()),
            ("pair_cap", self.pair_cap.to_string()),
            ("normalize_weights", self.normalize_weights.to_string()),
            ("k", self.k.to_string()),
            ("kmeans_restarts", self.kmeans_restarts.to_string()),
            ("kmeans_max_iters", self.kmeans_max_iters.to_string()),
            ("kmeans_tol", format!("{:?}", self.kmeans_tol)),
            ("model_seed", self.model_seed.to_string()),
            ("sampling_seed", self.sampling_seed.to_string()),
            ("kmeans_seed", self.kmeans_seed.to_string()),
            ("output_dir", path(&self.output_dir)),
        ]
    }

    /// Ordered key/value view, used for the report echo.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.entries()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| DacError::Config {
                line: line_no,
                reason,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(first) = seen.insert(key.to_string(), line_no) {
                return Err(err(format!(
                    "duplicate key {key:?} (first on line {first})"
                )));
            }
            cfg.set(key, value).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse()
                .map_err(|_| format!("invalid value {v:?} for {key}"))
        }
        fn list(key: &str, v: &str) -> std::result::Result<Vec<usize>, String> {
            v.split(',').map(|w| num(key, w.trim())).collect()
        }
        match key {
            "dataset_name" => self.dataset_name = value.to_string(),
            "dataset_kind" => self.dataset_kind = value.parse()?,
            "train_features" => self.train_features = value.into(),
            "train_labels" => self.train_labels = value.into(),
            "test_features" => self.test_features = value.into(),
            "test_labels" => self.test_labels = value.into(),
            "train_limit" => self.train_limit = num(key, value)?,
            "test_limit" => self.test_limit = num(key, value)?,
            "encoder_widths" => self.encoder_widths = list(key, value)?,
            "decoder_widths" => self.decoder_widths = list(key, value)?,
            "code_dim" => self.code_dim = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "lr_initial" => self.lr_initial = num(key, value)?,
            "lr_step_epochs" => self.lr_step_epochs = num(key, value)?,
            "lr_decay_factor" => self.lr_decay_factor = num(key, value)?,
            "adam_beta1" => self.adam_beta1 = num(key, value)?,
            "adam_beta2" => self.adam_beta2 = num(key, value)?,
            "adam_epsilon" => self.adam_epsilon = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "weight_samples" => self.weight_samples = num(key, value)?,
            "pair_cap" => self.pair_cap = num(key, value)?,
            "normalize_weights" => self.normalize_weights = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "kmeans_restarts" => self.kmeans_restarts = num(key, value)?,
            "kmeans_max_iters" => self.kmeans_max_iters = num(key, value)?,
            "kmeans_tol" => self.kmeans_tol = num(key, value)?,
            "model_seed" => self.model_seed = num(key, value)?,
            "sampling_seed" => self.sampling_seed = num(key, value)?,
            "kmeans_seed" => self.kmeans_seed = num(key, value)?,
            "output_dir" => self.output_dir = value.into(),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = String::from_utf8(read_file(path)?)
            .map_err(|_| DacError::format(path, "config is not UTF-8"))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_text().as_bytes())
    }
}
