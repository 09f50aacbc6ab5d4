use serde::{Deserialize, Serialize};

use super::params::{Gradients, ParamStore};
use crate::error::{Error, Result};

/// Rescale all gradients so their global L2 norm is at most `max_norm`.
pub fn clip_global_norm(mut g: Gradients, max_norm: f64) -> Gradients {
    assert!(max_norm > 0.0, "max_norm must be positive");
    let n = g.global_norm();
    if n > max_norm {
        g.scale(max_norm / n);
    }
    g
}

/// Learning rate after `epoch` decays: `lr0 / divisor^epoch`.
pub fn lr_at_epoch(lr0: f64, epoch: u32, divisor: f64) -> f64 {
    assert!(lr0 > 0.0 && divisor > 1.0);
    lr0 / divisor.powi(epoch as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    pub fn new(params: &ParamStore) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|(_, _, t)| vec![0.0; t.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update of every parameter.
pub fn adam_step(
    params: &mut ParamStore,
    g: &Gradients,
    state: &mut AdamState,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<()> {
    if state.m.len() != params.len() {
        return Err(Error::Shape(format!(
            "optimizer tracks {} parameters, store has {}",
            state.m.len(),
            params.len()
        )));
    }
    for (id, t) in g.iter() {
        if id.0 >= params.len() || params.get(id).shape() != t.shape() {
            return Err(Error::Shape(format!("gradient for parameter {}", id.0)));
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for id in params.ids().collect::<Vec<_>>() {
        let m = &mut state.m[id.0];
        let v = &mut state.v[id.0];
        let grad = g.get(id).map(|t| t.data());
        let p = params.get_mut(id).data_mut();
        for i in 0..p.len() {
            let gi = grad.map_or(0.0, |d| d[i]);
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            let mhat = m[i] / bc1;
            let vhat = v[i] / bc2;
            p[i] -= lr * mhat / (vhat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}
