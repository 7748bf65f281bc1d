use ndarray::Zip;

use super::model::{Gradients, TdnnModel};
use crate::error::{Error, Result};

/// Factor applied to the learning rate when the development loss rises.
pub const LR_DECAY: f64 = 0.7;

/// Adam moments and hyper-parameters for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Gradients,
    v: Gradients,
    step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub const DEFAULT_LEARNING_RATE: f64 = 0.0005;

    pub fn new(model: &TdnnModel, learning_rate: f64) -> Self {
        AdamState {
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &Gradients {
        &self.m
    }

    pub fn second_moment(&self) -> &Gradients {
        &self.v
    }
}

/// One bias-corrected Adam update of every weight and bias.
pub fn adam_step(model: &mut TdnnModel, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    if grads.layers.len() != model.layers().len()
        || grads
            .layers
            .iter()
            .zip(model.layers())
            .any(|(g, l)| g.weight.dim() != l.weight().dim() || g.bias.len() != l.bias().len())
    {
        return Err(Error::invalid("gradient shapes do not match the model"));
    }
    state.step += 1;
    let (b1, b2, eps, lr) = (state.beta1, state.beta2, state.epsilon, state.learning_rate);
    let c1 = 1.0 - b1.powi(state.step as i32);
    let c2 = 1.0 - b2.powi(state.step as i32);
    let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    };
    for (i, layer) in model.layers_mut().iter_mut().enumerate() {
        let (w, b) = layer.params_mut();
        Zip::from(w)
            .and(&mut state.m.layers[i].weight)
            .and(&mut state.v.layers[i].weight)
            .and(&grads.layers[i].weight)
            .for_each(|p, m, v, &g| update(p, m, v, g));
        Zip::from(b)
            .and(&mut state.m.layers[i].bias)
            .and(&mut state.v.layers[i].bias)
            .and(&grads.layers[i].bias)
            .for_each(|p, m, v, &g| update(p, m, v, g));
    }
    Ok(())
}

/// Decays the learning rate by [`LR_DECAY`] when the development loss increased.
pub fn lr_update(state: &mut AdamState, prev_dev_loss: f64, curr_dev_loss: f64) {
    if curr_dev_loss > prev_dev_loss {
        state.learning_rate *= LR_DECAY;
    }
}
