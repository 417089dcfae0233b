//! Fully-connected autoencoder with hand-written backpropagation.
//!
//! A model is a fixed chain of [`DenseLayer`]s split into an encoder and a
//! decoder. Each dense layer computes `z = x·Wᵀ + b` and then applies up to
//! two activations in order. [`Autoencoder::forward`] records every stage so
//! that [`Autoencoder::backward`] can produce exact parameter gradients for
//! any loss whose gradient with respect to the reconstruction is known.

mod serialize;

use ndarray::{Array1, Axis, Zip};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DacError, Result};
use crate::Matrix;

pub use serialize::{MODEL_FORMAT_VERSION, MODEL_MAGIC};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Identity => x,
        }
    }

    /// Derivative at `input`, given `output = self.apply(input)`.
    #[inline]
    fn derivative(self, input: f64, output: f64) -> f64 {
        match self {
            Activation::Relu => {
                if input > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - output * output,
            Activation::Sigmoid => output * (1.0 - output),
            Activation::Identity => 1.0,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
            Activation::Sigmoid => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => Activation::Identity,
            1 => Activation::Relu,
            2 => Activation::Tanh,
            3 => Activation::Sigmoid,
            _ => return None,
        })
    }
}

/// Dense layer `out_dim × in_dim` followed by at most two activations.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub(crate) weights: Matrix,
    pub(crate) bias: Array1<f64>,
    pub(crate) activations: Vec<Activation>,
}

impl DenseLayer {
    pub const MAX_ACTIVATIONS: usize = 2;

    pub fn new(weights: Matrix, bias: Array1<f64>, activations: Vec<Activation>) -> Result<Self> {
        if bias.len() != weights.nrows() {
            return Err(DacError::DimensionMismatch {
                context: "layer bias",
                expected: weights.nrows(),
                found: bias.len(),
            });
        }
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(DacError::InvalidArgument(
                "layer with a zero dimension".into(),
            ));
        }
        if activations.len() > Self::MAX_ACTIVATIONS {
            return Err(DacError::InvalidArgument(format!(
                "a layer takes at most {} activations, got {}",
                Self::MAX_ACTIVATIONS,
                activations.len()
            )));
        }
        if !weights.iter().chain(bias.iter()).all(|v| v.is_finite()) {
            return Err(DacError::NonFinite("layer parameters"));
        }
        Ok(Self {
            weights,
            bias,
            activations,
        })
    }

    pub fn zeros(in_dim: usize, out_dim: usize, activations: Vec<Activation>) -> Result<Self> {
        Self::new(
            Matrix::zeros((out_dim, in_dim)),
            Array1::zeros(out_dim),
            activations,
        )
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Encoder and decoder layer chain.
///
/// `revision` changes whenever parameters are mutated through the model, so a
/// [`ForwardCache`] taken before an update is rejected by `backward`.
#[derive(Debug, Clone)]
pub struct Autoencoder {
    layers: Vec<DenseLayer>,
    encoder_len: usize,
    revision: u64,
}

impl PartialEq for Autoencoder {
    fn eq(&self, other: &Self) -> bool {
        self.encoder_len == other.encoder_len && self.layers == other.layers
    }
}

/// Per-layer inputs and activation stages recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    revision: u64,
    inputs: Vec<Matrix>,
    /// `stages[l][0]` is the pre-activation, `stages[l][j + 1]` the output of activation `j`.
    stages: Vec<Vec<Matrix>>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.inputs.first().map_or(0, |m| m.nrows())
    }
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub code: Matrix,
    pub reconstruction: Matrix,
    pub cache: ForwardCache,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Matrix,
    pub bias: Array1<f64>,
}

/// One gradient per layer parameter, in model layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub layers: Vec<LayerGradient>,
}

impl GradientSet {
    pub fn zeros_like(model: &Autoencoder) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| LayerGradient {
                    weights: Matrix::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.len()),
                })
                .collect(),
        }
    }

    pub fn matches(&self, model: &Autoencoder) -> bool {
        self.layers.len() == model.layers.len()
            && self
                .layers
                .iter()
                .zip(&model.layers)
                .all(|(g, l)| g.weights.dim() == l.weights.dim() && g.bias.len() == l.bias.len())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|g| g.weights.iter().chain(g.bias.iter()).all(|v| v.is_finite()))
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.layers {
            g.weights *= factor;
            g.bias *= factor;
        }
    }

    /// `self += coef · θ` for every model parameter θ.
    pub fn add_scaled_parameters(&mut self, model: &Autoencoder, coef: f64) -> Result<()> {
        if !self.matches(model) {
            return Err(DacError::InvalidArgument(
                "gradient set does not match model shape".into(),
            ));
        }
        for (g, l) in self.layers.iter_mut().zip(&model.layers) {
            g.weights.scaled_add(coef, &l.weights);
            g.bias.scaled_add(coef, &l.bias);
        }
        Ok(())
    }

    /// Flattened in the same order as [`Autoencoder::flat_parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in &self.layers {
            out.extend(g.weights.iter());
            out.extend(g.bias.iter());
        }
        out
    }
}

impl Autoencoder {
    /// Builds the default architecture: encoder hidden layers followed by
    /// ReLU then Tanh, the code layer by Tanh, decoder hidden layers by Tanh
    /// and the output layer by Sigmoid. Weights are Xavier-uniform, biases zero.
    pub fn init(encoder_widths: &[usize], decoder_widths: &[usize], seed: u64) -> Result<Self> {
        validate_widths(encoder_widths, decoder_widths)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(encoder_widths.len() + decoder_widths.len() - 2);

        let enc_layers = encoder_widths.len() - 1;
        for (i, pair) in encoder_widths.windows(2).enumerate() {
            let acts = if i + 1 == enc_layers {
                vec![Activation::Tanh]
            } else {
                vec![Activation::Relu, Activation::Tanh]
            };
            layers.push(xavier_layer(pair[0], pair[1], acts, &mut rng));
        }
        let dec_layers = decoder_widths.len() - 1;
        for (i, pair) in decoder_widths.windows(2).enumerate() {
            let acts = if i + 1 == dec_layers {
                vec![Activation::Sigmoid]
            } else {
                vec![Activation::Tanh]
            };
            layers.push(xavier_layer(pair[0], pair[1], acts, &mut rng));
        }
        Ok(Self {
            layers,
            encoder_len: enc_layers,
            revision: 0,
        })
    }

    /// Assembles a model from explicit layers; only dimensional consistency is checked.
    pub fn from_layers(encoder: Vec<DenseLayer>, decoder: Vec<DenseLayer>) -> Result<Self> {
        if encoder.is_empty() || decoder.is_empty() {
            return Err(DacError::InvalidArgument(
                "encoder and decoder each need at least one layer".into(),
            ));
        }
        let encoder_len = encoder.len();
        let layers: Vec<DenseLayer> = encoder.into_iter().chain(decoder).collect();
        for pair in layers.windows(2) {
            if pair[1].in_dim() != pair[0].out_dim() {
                return Err(DacError::DimensionMismatch {
                    context: "layer chain",
                    expected: pair[0].out_dim(),
                    found: pair[1].in_dim(),
                });
            }
        }
        let input_dim = layers[0].in_dim();
        let output_dim = layers.last().unwrap().out_dim();
        if input_dim != output_dim {
            return Err(DacError::DimensionMismatch {
                context: "decoder output",
                expected: input_dim,
                found: output_dim,
            });
        }
        Ok(Self {
            layers,
            encoder_len,
            revision: 0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn code_dim(&self) -> usize {
        self.layers[self.encoder_len - 1].out_dim()
    }

    pub fn encoder(&self) -> &[DenseLayer] {
        &self.layers[..self.encoder_len]
    }

    pub fn decoder(&self) -> &[DenseLayer] {
        &self.layers[self.encoder_len..]
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::parameter_count).sum()
    }

    /// Layer widths from input through code back to output.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(DenseLayer::out_dim))
            .collect()
    }

    /// All parameters, layer by layer: weights row-major, then bias.
    pub fn flat_parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_flat_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(DacError::DimensionMismatch {
                context: "flat parameters",
                expected: self.parameter_count(),
                found: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(DacError::NonFinite("flat parameters"));
        }
        let mut it = values.iter();
        self.for_each_parameter_mut(|p| *p = *it.next().unwrap());
        Ok(())
    }

    /// Visits every parameter in flat order. Counts as a parameter update.
    pub fn for_each_parameter_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        self.revision = self.revision.wrapping_add(1);
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(&mut f);
            l.bias.iter_mut().for_each(&mut f);
        }
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        self.revision = self.revision.wrapping_add(1);
        &mut self.layers
    }

    pub fn forward(&self, batch: &Matrix) -> Result<ForwardPass> {
        self.check_batch(batch)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut stages = Vec::with_capacity(self.layers.len());
        let mut current = batch.clone();
        for layer in &self.layers {
            let layer_stages = layer_forward(layer, &current);
            let out = layer_stages.last().unwrap().clone();
            inputs.push(std::mem::replace(&mut current, out));
            stages.push(layer_stages);
        }
        let code = stages[self.encoder_len - 1].last().unwrap().clone();
        Ok(ForwardPass {
            code,
            reconstruction: current,
            cache: ForwardCache {
                revision: self.revision,
                inputs,
                stages,
            },
        })
    }

    /// Encoder output only; no cache is kept.
    pub fn encode(&self, batch: &Matrix) -> Result<Matrix> {
        self.check_batch(batch)?;
        let mut current = batch.clone();
        for layer in self.encoder() {
            current = layer_forward(layer, &current).pop().unwrap();
        }
        Ok(current)
    }

    /// Reconstruction only; no cache is kept.
    pub fn reconstruct(&self, batch: &Matrix) -> Result<Matrix> {
        self.check_batch(batch)?;
        let mut current = batch.clone();
        for layer in &self.layers {
            current = layer_forward(layer, &current).pop().unwrap();
        }
        Ok(current)
    }

    /// Gradients of a scalar loss with respect to every parameter, given the
    /// loss gradient with respect to the reconstruction.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &Matrix) -> Result<GradientSet> {
        if cache.revision != self.revision || cache.stages.len() != self.layers.len() {
            return Err(DacError::StaleCache);
        }
        for (layer, input) in self.layers.iter().zip(&cache.inputs) {
            if input.ncols() != layer.in_dim() {
                return Err(DacError::StaleCache);
            }
        }
        let expected = (cache.batch_size(), self.input_dim());
        if grad_output.dim() != expected {
            return Err(DacError::DimensionMismatch {
                context: "reconstruction gradient",
                expected: expected.0 * expected.1,
                found: grad_output.len(),
            });
        }
        if !grad_output.iter().all(|v| v.is_finite()) {
            return Err(DacError::NonFinite("reconstruction gradient"));
        }

        let mut grads: Vec<LayerGradient> = Vec::with_capacity(self.layers.len());
        let mut delta = grad_output.clone();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let stages = &cache.stages[idx];
            for (j, act) in layer.activations.iter().enumerate().rev() {
                if *act == Activation::Identity {
                    continue;
                }
                Zip::from(&mut delta)
                    .and(&stages[j])
                    .and(&stages[j + 1])
                    .for_each(|d, &x, &y| *d *= act.derivative(x, y));
            }
            let input = &cache.inputs[idx];
            let weights = delta.t().dot(input);
            let bias = delta.sum_axis(Axis(0));
            if idx > 0 {
                delta = delta.dot(&layer.weights);
            }
            grads.push(LayerGradient { weights, bias });
        }
        grads.reverse();
        Ok(GradientSet { layers: grads })
    }

    fn check_batch(&self, batch: &Matrix) -> Result<()> {
        if batch.ncols() != self.input_dim() {
            return Err(DacError::DimensionMismatch {
                context: "batch columns",
                expected: self.input_dim(),
                found: batch.ncols(),
            });
        }
        if !batch.iter().all(|v| v.is_finite()) {
            return Err(DacError::NonFinite("batch"));
        }
        Ok(())
    }
}

fn validate_widths(encoder: &[usize], decoder: &[usize]) -> Result<()> {
    if encoder.is_empty() || decoder.is_empty() {
        return Err(DacError::InvalidArgument("empty width list".into()));
    }
    if encoder.len() < 2 || decoder.len() < 2 {
        return Err(DacError::InvalidArgument(
            "width lists need an input and an output width".into(),
        ));
    }
    if encoder.iter().chain(decoder).any(|&w| w == 0) {
        return Err(DacError::InvalidArgument("widths must be positive".into()));
    }
    if encoder.last() != decoder.first() {
        return Err(DacError::DimensionMismatch {
            context: "decoder head width",
            expected: *encoder.last().unwrap(),
            found: decoder[0],
        });
    }
    if encoder.first() != decoder.last() {
        return Err(DacError::DimensionMismatch {
            context: "decoder tail width",
            expected: encoder[0],
            found: *decoder.last().unwrap(),
        });
    }
    Ok(())
}

fn xavier_layer(
    in_dim: usize,
    out_dim: usize,
    activations: Vec<Activation>,
    rng: &mut ChaCha8Rng,
) -> DenseLayer {
    let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound);
    let weights = Matrix::from_shape_simple_fn((out_dim, in_dim), || dist.sample(rng));
    DenseLayer {
        weights,
        bias: Array1::zeros(out_dim),
        activations,
    }
}

/// Returns `[z, act_1(z), act_2(act_1(z)), ...]`; a layer without activations yields `[z]`.
fn layer_forward(layer: &DenseLayer, input: &Matrix) -> Vec<Matrix> {
    let mut z = input.dot(&layer.weights.t());
    z += &layer.bias;
    let mut stages = Vec::with_capacity(1 + layer.activations.len());
    stages.push(z);
    for act in &layer.activations {
        let next = stages.last().unwrap().mapv(|x| act.apply(x));
        stages.push(next);
    }
    stages
}
