use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};
use crate::{Error, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 2.5e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: DEFAULT_LEARNING_RATE,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }
}

/// First and second moment estimates for one parameter set.
///
/// Moments are allocated on the first step and must keep the same layout
/// afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        Self { config, t: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.v
    }

    /// One bias-corrected Adam update of `params` along `grads`.
    pub fn step(&mut self, mut params: Vec<&mut [f64]>, grads: Vec<&[f64]>) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::DimensionMismatch {
                expected: params.len(),
                actual: grads.len(),
            });
        }
        for (p, g) in params.iter().zip(&grads) {
            if p.len() != g.len() {
                return Err(Error::DimensionMismatch { expected: p.len(), actual: g.len() });
            }
        }
        if grads.iter().any(|g| g.iter().any(|x| !x.is_finite())) {
            return Err(Error::Divergence("non-finite gradient".into()));
        }
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        } else if self.m.len() != grads.len()
            || self.m.iter().zip(&grads).any(|(m, g)| m.len() != g.len())
        {
            return Err(Error::InvalidArgument("parameter layout changed between steps".into()));
        }

        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powf(self.t as f64);
        let c2 = 1.0 - beta2.powf(self.t as f64);
        for (((p, g), m), v) in params.iter_mut().zip(&grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..g.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        if params.iter().any(|p| p.iter().any(|x| !x.is_finite())) {
            return Err(Error::Divergence("non-finite parameter after update".into()));
        }
        Ok(())
    }

    pub fn step_mlp(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<()> {
        self.step(net.param_slices_mut(), grads.slices())
    }
}
