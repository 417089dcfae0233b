//! Deep autoencoder-based clustering.
//!
//! A fully-connected autoencoder is trained under a clustering-weighted
//! reconstruction objective. Its encoder output is then clustered with
//! K-Means and scored against ground truth with the Adjusted Rand Index,
//! alongside a baseline that clusters the raw features directly.
//!
//! The crate is organized bottom-up:
//!
//! - [`nn`]: dense layers, forward and backward passes, model files.
//! - [`loss`]: per-feature clustering weights and the weighted objective.
//! - [`optim`]: Adam with a step-decay learning-rate schedule.
//! - [`cluster`]: K-Means (k-means++ seeding, Lloyd iterations, restarts).
//! - [`metrics`]: Adjusted Rand Index over a contingency table.
//! - [`data`]: IDX and HAPT ingestion, normalization, subsampling, cache files.
//! - [`pipeline`]: configuration, training, evaluation, reports and image export.

pub mod cluster;
pub mod data;
pub mod error;
mod io_util;
pub mod loss;
pub mod metrics;
pub mod nn;
pub mod optim;
pub mod pipeline;

pub use cluster::{kmeans, ClusteringResult, KMeansParams};
pub use data::{Dataset, FeatureRange, Normalization};
pub use error::{DacError, Result};
pub use loss::{FeatureWeights, LossReport, PairSampling};
pub use metrics::{adjusted_rand_index, ContingencyTable};
pub use nn::{Activation, Autoencoder, DenseLayer, ForwardCache, GradientSet};
pub use optim::{AdamParams, AdamState, LrSchedule};
pub use pipeline::{RunConfig, RunReport};

/// Dense row-major matrix of `f64`; rows are samples, columns are features.
pub type Matrix = ndarray::Array2<f64>;
