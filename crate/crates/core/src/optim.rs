//! Adam with bias correction and a step-decay learning-rate schedule.

use crate::error::{DacError, Result};
use crate::nn::{Autoencoder, GradientSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamParams {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.epsilon.is_finite();
        if ok {
            Ok(())
        } else {
            Err(DacError::InvalidArgument(format!(
                "invalid Adam hyperparameters {self:?}"
            )))
        }
    }
}

/// First and second moment estimates, one buffer per model parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step_count: u64,
    pub params: AdamParams,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    shapes: Vec<(usize, usize)>,
}

impl AdamState {
    pub fn new(model: &Autoencoder, params: AdamParams) -> Result<Self> {
        params.validate()?;
        let n = model.parameter_count();
        Ok(Self {
            step_count: 0,
            params,
            first_moment: vec![0.0; n],
            second_moment: vec![0.0; n],
            shapes: layer_shapes(model),
        })
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }
}

fn layer_shapes(model: &Autoencoder) -> Vec<(usize, usize)> {
    model
        .layers()
        .iter()
        .map(|l| (l.out_dim(), l.in_dim()))
        .collect()
}

/// One in-place Adam update of every model parameter.
pub fn adam_step(
    model: &mut Autoencoder,
    grads: &GradientSet,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if !lr.is_finite() || lr <= 0.0 {
        return Err(DacError::InvalidArgument(format!(
            "learning rate must be positive, got {lr}"
        )));
    }
    if !grads.matches(model) || state.shapes != layer_shapes(model) {
        return Err(DacError::InvalidArgument(
            "gradients or optimizer state do not match the model".into(),
        ));
    }
    if !grads.is_finite() {
        return Err(DacError::NonFinite("gradients"));
    }

    state.step_count += 1;
    let t = state.step_count;
    let hp = state.params;
    let mut offset = 0;
    for (layer, g) in model.layers_mut().iter_mut().zip(&grads.layers) {
        let w = layer
            .weights
            .as_slice_mut()
            .expect("standard layout weights");
        let gw = g.weights.as_standard_layout();
        let gw = gw.as_slice().unwrap();
        let end = offset + w.len();
        adam_update(
            w,
            gw,
            &mut state.first_moment[offset..end],
            &mut state.second_moment[offset..end],
            t,
            lr,
            hp,
        );
        offset = end;

        let b = layer.bias.as_slice_mut().unwrap();
        let gb = g.bias.as_slice().unwrap();
        let end = offset + b.len();
        adam_update(
            b,
            gb,
            &mut state.first_moment[offset..end],
            &mut state.second_moment[offset..end],
            t,
            lr,
            hp,
        );
        offset = end;
    }
    Ok(())
}

/// Adam update on flat slices; `t` is the 1-based step index.
pub(crate) fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    lr: f64,
    hp: AdamParams,
) {
    let bc1 = 1.0 - hp.beta1.powf(t as f64);
    let bc2 = 1.0 - hp.beta2.powf(t as f64);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(m.iter_mut())
        .zip(v.iter_mut())
    {
        *m = hp.beta1 * *m + (1.0 - hp.beta1) * g;
        *v = hp.beta2 * *v + (1.0 - hp.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + hp.epsilon);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayKind {
    Step,
}

/// `lr(epoch) = initial_lr · decay_factor^⌊epoch / step_size⌋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub initial_lr: f64,
    pub decay_kind: DecayKind,
    pub step_size_epochs: usize,
    pub decay_factor: f64,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self {
            initial_lr: 0.003,
            decay_kind: DecayKind::Step,
            step_size_epochs: 50,
            decay_factor: 0.5,
        }
    }
}

impl LrSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = self.initial_lr > 0.0
            && self.initial_lr.is_finite()
            && self.step_size_epochs > 0
            && self.decay_factor > 0.0
            && self.decay_factor <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(DacError::InvalidArgument(format!(
                "invalid learning-rate schedule {self:?}"
            )))
        }
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        match self.decay_kind {
            DecayKind::Step => {
                let decays = (epoch / self.step_size_epochs) as i32;
                self.initial_lr * self.decay_factor.powi(decays)
            }
        }
    }
}
