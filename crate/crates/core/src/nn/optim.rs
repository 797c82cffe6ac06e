//! Adam and the reduce-on-plateau learning-rate schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A model whose parameters can be handed to an optimizer as
/// `(values, gradients)` pairs in a fixed declaration order.
pub trait Parameterized {
    fn tensors(&mut self) -> Vec<(&mut [f64], &mut [f64])>;

    fn zero_grad(&mut self) {
        for (_, g) in self.tensors() {
            g.fill(0.0);
        }
    }

    fn param_count(&mut self) -> usize {
        self.tensors().iter().map(|(p, _)| p.len()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Clone, Debug)]
pub struct Adam {
    pub config: AdamConfig,
    pub lr: f64,
    pub steps: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, config: AdamConfig) -> Self {
        Self { config, lr, steps: 0, first: Vec::new(), second: Vec::new() }
    }

    pub fn moments(&self) -> (&[Vec<f64>], &[Vec<f64>]) {
        (&self.first, &self.second)
    }

    /// One bias-corrected step over all tensors. Nothing is updated when any
    /// gradient is non-finite.
    pub fn step(&mut self, tensors: &mut [(&mut [f64], &mut [f64])]) -> Result<()> {
        for (t, (_, g)) in tensors.iter().enumerate() {
            if let Some(i) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::Training(format!(
                    "non-finite gradient {} in tensor {t} at index {i} (step {})",
                    g[i],
                    self.steps + 1
                )));
            }
        }
        if self.first.is_empty() {
            self.first = tensors.iter().map(|(p, _)| vec![0.0; p.len()]).collect();
            self.second = self.first.clone();
        }
        if self.first.len() != tensors.len() || self.first.iter().zip(tensors.iter()).any(|(m, (p, _))| m.len() != p.len()) {
            return Err(Error::State("optimizer state does not match the parameter shapes".into()));
        }
        self.steps += 1;
        let AdamConfig { beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.steps as i32);
        let c2 = 1.0 - beta2.powi(self.steps as i32);
        for ((p, g), (m, v)) in tensors.iter_mut().zip(self.first.iter_mut().zip(self.second.iter_mut())) {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= self.lr * mh / (vh.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauConfig {
    pub factor: f64,
    pub patience: usize,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self { factor: 1.0 / 3.0, patience: 5 }
    }
}

/// Multiplies the learning rate by `factor` after `patience` consecutive
/// epochs without a strict improvement of the best loss.
#[derive(Clone, Debug)]
pub struct PlateauScheduler {
    pub config: PlateauConfig,
    pub best: f64,
    pub bad_epochs: usize,
}

impl PlateauScheduler {
    pub fn new(config: PlateauConfig) -> Self {
        Self { config, best: f64::INFINITY, bad_epochs: 0 }
    }

    /// Feed one epoch's loss and return the learning rate to use next.
    pub fn update(&mut self, loss: f64, lr: f64) -> f64 {
        if loss < self.best {
            self.best = loss;
            self.bad_epochs = 0;
            return lr;
        }
        self.bad_epochs += 1;
        if self.bad_epochs >= self.config.patience {
            self.bad_epochs = 0;
            return lr * self.config.factor;
        }
        lr
    }
}

pub fn plateau_scheduler_update(state: &mut PlateauScheduler, validation_loss: f64, lr: f64) -> f64 {
    state.update(validation_loss, lr)
}
