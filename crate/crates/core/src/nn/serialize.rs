//! `DACM` model files.
//!
//! Layout, little-endian: magic `DACM`, `u32` format version, `u32` layer
//! count, `u32` encoder layer count, then per layer `u32` in_dim, `u32`
//! out_dim, `u32` activation count, one `u8` code per activation, `f64`
//! weights row-major (out_dim × in_dim) and `f64` biases.

use std::path::Path;

use ndarray::Array1;

use super::{Activation, Autoencoder, DenseLayer};
use crate::error::{DacError, Result};
use crate::io_util::{dim_u32, put_f64s, put_u32, read_file, write_file, LeReader};
use crate::Matrix;

pub const MODEL_MAGIC: &[u8; 4] = b"DACM";
pub const MODEL_FORMAT_VERSION: u32 = 1;

impl Autoencoder {
    pub fn to_bytes(&self) -> Vec<u8> {
        let path = Path::new("<model>");
        let mut buf = Vec::with_capacity(16 + self.parameter_count() * 8);
        buf.extend_from_slice(MODEL_MAGIC);
        put_u32(&mut buf, MODEL_FORMAT_VERSION);
        // Dimensions were validated as usize on construction; u32 limits are far above any real layer.
        put_u32(
            &mut buf,
            dim_u32(path, "layer count", self.layers.len()).unwrap(),
        );
        put_u32(
            &mut buf,
            dim_u32(path, "encoder length", self.encoder_len).unwrap(),
        );
        for layer in &self.layers {
            put_u32(&mut buf, dim_u32(path, "in_dim", layer.in_dim()).unwrap());
            put_u32(&mut buf, dim_u32(path, "out_dim", layer.out_dim()).unwrap());
            put_u32(&mut buf, layer.activations.len() as u32);
            buf.extend(layer.activations.iter().map(|a| a.code()));
            put_f64s(&mut buf, layer.weights.iter());
            put_f64s(&mut buf, layer.bias.iter());
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = LeReader::new(path, bytes);
        r.magic(MODEL_MAGIC)?;
        let version = r.u32()?;
        if version != MODEL_FORMAT_VERSION {
            return Err(DacError::format(
                path,
                format!("unsupported model format version {version}"),
            ));
        }
        let layer_count = r.u32()? as usize;
        let encoder_len = r.u32()? as usize;
        if encoder_len == 0 || encoder_len >= layer_count {
            return Err(DacError::format(
                path,
                format!("encoder length {encoder_len} invalid for {layer_count} layers"),
            ));
        }
        let mut layers = Vec::with_capacity(layer_count);
        for _ in 0..layer_count {
            let in_dim = r.u32()? as usize;
            let out_dim = r.u32()? as usize;
            let n_act = r.u32()? as usize;
            if n_act > DenseLayer::MAX_ACTIVATIONS {
                return Err(DacError::format(
                    path,
                    format!("{n_act} activations on one layer"),
                ));
            }
            let mut activations = Vec::with_capacity(n_act);
            for _ in 0..n_act {
                let code = r.u8()?;
                activations.push(Activation::from_code(code).ok_or_else(|| {
                    DacError::format(path, format!("unknown activation code {code}"))
                })?);
            }
            let weights = Matrix::from_shape_vec((out_dim, in_dim), r.f64s(out_dim * in_dim)?)
                .map_err(|e| DacError::format(path, e.to_string()))?;
            let bias = Array1::from_vec(r.f64s(out_dim)?);
            layers.push(
                DenseLayer::new(weights, bias, activations)
                    .map_err(|e| DacError::format(path, e.to_string()))?,
            );
        }
        r.finish()?;
        let decoder = layers.split_off(encoder_len);
        Autoencoder::from_layers(layers, decoder).map_err(|e| DacError::format(path, e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&read_file(path)?, path)
    }
}
