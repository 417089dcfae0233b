//! 8-bit binary PGM (`P5`) exports.

use std::path::Path;

use crate::data::Dataset;
use crate::error::{DacError, Result};
use crate::io_util::write_file;
use crate::loss::FeatureWeights;
use crate::nn::Autoencoder;

pub fn write_pgm(path: impl AsRef<Path>, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    if pixels.len() != width * height || pixels.is_empty() {
        return Err(DacError::InvalidArgument(format!(
            "{} pixels for a {width}x{height} image",
            pixels.len()
        )));
    }
    let mut buf = format!("P5\n{width} {height}\n255\n").into_bytes();
    buf.extend_from_slice(pixels);
    write_file(path.as_ref(), &buf)
}

/// `[0, 1] → [0, 255]`, rounding half up.
fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Weight image with `[min w, max w]` mapped linearly to `[0, 255]`; a
/// constant map is all white.
pub fn export_weight_map(
    weights: &FeatureWeights,
    side: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    if side == 0 || side * side != weights.len() {
        return Err(DacError::InvalidArgument(format!(
            "{} weights do not form a {side}x{side} grid",
            weights.len()
        )));
    }
    let w = weights.values();
    let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let pixels: Vec<u8> = w
        .iter()
        .map(|&v| {
            if span > 0.0 {
                quantize((v - lo) / span)
            } else {
                255
            }
        })
        .collect();
    write_pgm(path, side, side, &pixels)
}

/// Two-row grid: the first `count` inputs on top, their reconstructions below.
pub fn export_reconstructions(
    model: &Autoencoder,
    ds: &Dataset,
    count: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    let side = ds.square_side().ok_or_else(|| {
        DacError::InvalidArgument(format!("{} features are not a square image", ds.dim()))
    })?;
    if count == 0 || count > ds.len() {
        return Err(DacError::InvalidArgument(format!(
            "cannot export {count} of {} samples",
            ds.len()
        )));
    }
    let originals = ds.features.slice(ndarray::s![..count, ..]).to_owned();
    let recon = model.reconstruct(&originals)?;
    let width = count * side;
    let mut pixels = vec![0u8; width * 2 * side];
    for (band, images) in [&originals, &recon].into_iter().enumerate() {
        for (i, img) in images.rows().into_iter().enumerate() {
            for (p, &v) in img.iter().enumerate() {
                let (r, c) = (p / side, p % side);
                pixels[(band * side + r) * width + i * side + c] = quantize(v);
            }
        }
    }
    write_pgm(path, width, 2 * side, &pixels)
}
