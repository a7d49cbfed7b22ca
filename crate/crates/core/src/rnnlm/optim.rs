//! Global-norm gradient clipping and Adam.

use super::params::RnnlmParams;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

pub fn global_norm(grads: &RnnlmParams) -> f64 {
    grads
        .slices()
        .iter()
        .flat_map(|s| s.iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt()
}

/// Rescale all gradients by `max_norm / norm` when the global L2 norm exceeds
/// `max_norm`. Returns the norm before clipping.
pub fn clip_gradients(grads: &mut RnnlmParams, max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm {
        let factor = max_norm / norm;
        for slice in grads.slices_mut() {
            slice.iter_mut().for_each(|g| *g *= factor);
        }
    }
    norm
}

/// First and second moment estimates, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamMoments {
    pub first: RnnlmParams,
    pub second: RnnlmParams,
}

impl AdamMoments {
    pub fn new(params: &RnnlmParams) -> AdamMoments {
        AdamMoments {
            first: params.zeros_like(),
            second: params.zeros_like(),
        }
    }
}

/// Bias-corrected Adam update on flat buffers; `step` starts at 1.
pub fn adam_update_slice(params: &mut [f64], grads: &[f64], first: &mut [f64], second: &mut [f64], step: u64, lr: f64) {
    let correction1 = 1.0 - ADAM_BETA1.powi(step as i32);
    let correction2 = 1.0 - ADAM_BETA2.powi(step as i32);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(first.iter_mut()).zip(second.iter_mut()) {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = *m / correction1;
        let v_hat = *v / correction2;
        *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}

pub fn adam_update(params: &mut RnnlmParams, grads: &RnnlmParams, moments: &mut AdamMoments, step: u64, lr: f64) {
    assert!(step >= 1, "Adam steps are counted from 1");
    let grads = grads.slices();
    let firsts = moments.first.slices_mut();
    let seconds = moments.second.slices_mut();
    for (((p, g), m), v) in params.slices_mut().into_iter().zip(grads).zip(firsts).zip(seconds) {
        adam_update_slice(p, g, m, v, step, lr);
    }
}
