//! Adam optimizer with bias correction.

use super::matrix::Matrix;
use crate::error::{EktfError, Result};

/// First/second moment buffers for one parameter tensor.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn for_param(param: &Matrix) -> Self {
        AdamState {
            m: vec![0.0; param.len()],
            v: vec![0.0; param.len()],
        }
    }
}

/// Optimizer hyperparameters, shared by all tensors.
#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One Adam update for one tensor. `t` is the global step count, 1-based.
/// The parameter name is only used to make failure reports actionable.
pub fn adam_step(
    name: &str,
    param: &mut Matrix,
    grad: &Matrix,
    state: &mut AdamState,
    cfg: &AdamConfig,
    t: u64,
) -> Result<()> {
    if param.len() != grad.len() {
        return Err(EktfError::Shape(format!(
            "adam: param {name} has {} values but gradient has {}",
            param.len(),
            grad.len()
        )));
    }
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);
    let p = param.as_mut_slice();
    for (i, &g) in grad.as_slice().iter().enumerate() {
        if !g.is_finite() {
            return Err(EktfError::Train(format!(
                "non-finite gradient for {name} at index {i}: {g}"
            )));
        }
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        p[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}
