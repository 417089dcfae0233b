//! Clustering-weighted reconstruction objective.
//!
//! Each input feature gets a weight in `[0, 1]` estimated from a labeled
//! sample: the mean within-class similarity `e^{-Δ²}` over same-label pairs
//! times the mean between-class dissimilarity `1 - e^{-Δ²}` over
//! different-label pairs. The reconstruction error of feature `i` is scaled
//! by `w_i`, and a squared-L2 penalty over all parameters is added with
//! coefficient `beta`.

mod weights;

use ndarray::Zip;

use crate::error::{DacError, Result};
use crate::nn::{Autoencoder, GradientSet};
use crate::Matrix;

pub use weights::{compute_feature_weights, FeatureWeights, PairSampling, WEIGHTS_MAGIC};

/// Balancing factor between reconstruction and regularization.
pub const DEFAULT_BETA: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub l_cmse: f64,
    pub l_reg: f64,
    pub total: f64,
    pub beta: f64,
}

fn check_shapes(y: &Matrix, y_hat: &Matrix, weights: &FeatureWeights) -> Result<()> {
    if y.dim() != y_hat.dim() {
        return Err(DacError::DimensionMismatch {
            context: "reconstruction shape",
            expected: y.len(),
            found: y_hat.len(),
        });
    }
    if weights.len() != y.ncols() {
        return Err(DacError::DimensionMismatch {
            context: "feature weights",
            expected: y.ncols(),
            found: weights.len(),
        });
    }
    if y.is_empty() {
        return Err(DacError::InvalidArgument("empty batch".into()));
    }
    Ok(())
}

/// Batch mean of `Σ_i w_i (y_i - ŷ_i)² / n`.
pub fn weighted_mse(y: &Matrix, y_hat: &Matrix, weights: &FeatureWeights) -> Result<f64> {
    check_shapes(y, y_hat, weights)?;
    let w = weights.values();
    let mut total = 0.0;
    for (row_y, row_hat) in y.rows().into_iter().zip(y_hat.rows()) {
        let mut s = 0.0;
        for ((a, b), wi) in row_y.iter().zip(row_hat.iter()).zip(w) {
            let d = a - b;
            s += wi * d * d;
        }
        total += s;
    }
    Ok(total / (y.ncols() as f64 * y.nrows() as f64))
}

/// Gradient of [`weighted_mse`] with respect to `y_hat`.
pub fn weighted_mse_grad(y: &Matrix, y_hat: &Matrix, weights: &FeatureWeights) -> Result<Matrix> {
    check_shapes(y, y_hat, weights)?;
    let scale = 2.0 / (y.ncols() as f64 * y.nrows() as f64);
    let mut grad = Matrix::zeros(y.raw_dim());
    let w = weights.values();
    for ((mut g, row_y), row_hat) in grad.rows_mut().into_iter().zip(y.rows()).zip(y_hat.rows()) {
        Zip::from(&mut g)
            .and(&row_y)
            .and(&row_hat)
            .and(w)
            .for_each(|g, &a, &b, &wi| *g = scale * wi * (b - a));
    }
    Ok(grad)
}

/// Sum of squares over every weight and bias.
pub fn l2_regularization(model: &Autoencoder) -> f64 {
    model
        .layers()
        .iter()
        .map(|l| {
            l.weights().iter().map(|v| v * v).sum::<f64>()
                + l.bias().iter().map(|v| v * v).sum::<f64>()
        })
        .sum()
}

pub fn total_loss(
    y: &Matrix,
    y_hat: &Matrix,
    weights: &FeatureWeights,
    model: &Autoencoder,
    beta: f64,
) -> Result<LossReport> {
    check_beta(beta)?;
    let l_cmse = weighted_mse(y, y_hat, weights)?;
    let l_reg = l2_regularization(model);
    Ok(LossReport {
        l_cmse,
        l_reg,
        total: l_cmse + beta * l_reg,
        beta,
    })
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(DacError::InvalidArgument(format!(
            "beta must be finite and non-negative, got {beta}"
        )));
    }
    Ok(())
}

/// Loss and full parameter gradient of the total objective for one batch,
/// where the batch is its own reconstruction target.
pub fn objective_gradients(
    model: &Autoencoder,
    batch: &Matrix,
    weights: &FeatureWeights,
    beta: f64,
) -> Result<(LossReport, GradientSet)> {
    check_beta(beta)?;
    let pass = model.forward(batch)?;
    let report = total_loss(batch, &pass.reconstruction, weights, model, beta)?;
    let upstream = weighted_mse_grad(batch, &pass.reconstruction, weights)?;
    let mut grads = model.backward(&pass.cache, &upstream)?;
    if beta > 0.0 {
        grads.add_scaled_parameters(model, 2.0 * beta)?;
    }
    Ok((report, grads))
}

#[cfg(test)]
mod tests;
