use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::params::{GradientAccumulator, NetDims, NetParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamHyper {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate.is_finite()
            && self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps.is_finite()
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid Adam hyperparameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub hyper: AdamHyper,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(dims: NetDims, hyper: AdamHyper) -> Self {
        Self::with_len(dims.parameter_count(), hyper)
    }

    /// State for a flat parameter vector of length `len`.
    pub fn with_len(len: usize, hyper: AdamHyper) -> Self {
        Self {
            hyper,
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            step_count: 0,
        }
    }

    /// Bias-corrected Adam update of a flat parameter slice.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.first_moment.len() {
            return Err(Error::shape(format!(
                "Adam update: {} params, {} grads, {} moments",
                params.len(),
                grads.len(),
                self.first_moment.len()
            )));
        }
        let AdamHyper {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.hyper;
        self.step_count += 1;
        let n = self.step_count as i32;
        let c1 = 1.0 - beta1.powi(n);
        let c2 = 1.0 - beta2.powi(n);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// One Adam step on the network parameters.
pub fn adam_step(params: &mut NetParams, grads: &GradientAccumulator, state: &mut AdamState) -> Result<()> {
    if params.dims() != grads.dims() {
        return Err(Error::shape("gradient dims differ from parameter dims"));
    }
    state.update(params.values_mut(), grads.values())
}
