use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Gradients, ParamStore};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Moments {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

/// Per-parameter first and second moments plus the shared step count.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub moments: IndexMap<String, Moments>,
}

/// Bias-corrected Adam update of one tensor at timestep `t >= 1`.
pub fn adam_update(param: &mut [f64], grad: &[f64], mom: &mut Moments, t: u64, cfg: &AdamConfig) -> Result<()> {
    if t == 0 {
        return Err(Error::protocol("Adam timestep starts at 1"));
    }
    if mom.m.is_empty() {
        mom.m = vec![0.0; param.len()];
        mom.v = vec![0.0; param.len()];
    }
    if grad.len() != param.len() || mom.m.len() != param.len() {
        return Err(Error::dim(format!(
            "Adam: parameter has {} entries, gradient {}, state {}",
            param.len(),
            grad.len(),
            mom.m.len()
        )));
    }
    let c1 = 1.0 - cfg.beta1.powi(t as i32);
    let c2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..param.len() {
        let g = grad[i];
        mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g;
        mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = mom.m[i] / c1;
        let v_hat = mom.v[i] / c2;
        param[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

/// One step over every trainable entry of `store`. Trainable parameters
/// missing from `grads` are treated as having zero gradient.
pub fn adam_step(store: &mut ParamStore, grads: &Gradients, state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    state.step += 1;
    let names: Vec<String> = store.trainable().map(|(n, _)| n.to_string()).collect();
    for name in names {
        let param = store.get_mut(&name)?;
        let zeros;
        let g = match grads.get(&name) {
            Some(g) => g.as_slice(),
            None => {
                zeros = vec![0.0; param.numel()];
                &zeros
            }
        };
        let mom = state.moments.entry(name.clone()).or_default();
        adam_update(param.data_mut(), g, mom, state.step, cfg)
            .map_err(|e| Error::dim(format!("{name}: {e}")))?;
    }
    Ok(())
}
