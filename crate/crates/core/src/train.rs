//! The shared epoch loop: seeded shuffling, mini-batches, Adam and the
//! plateau scheduler.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Adam, AdamConfig, Parameterized, PlateauConfig, PlateauScheduler};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSettings {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub scheduler_factor: f64,
    pub scheduler_patience: usize,
}

impl TrainSettings {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !(self.scheduler_factor > 0.0 && self.scheduler_factor <= 1.0) {
            return Err(Error::config("scheduler factor must lie in (0, 1]"));
        }
        if self.scheduler_patience == 0 {
            return Err(Error::config("scheduler patience must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
    /// Learning rate used during this epoch.
    pub lr: f64,
}

/// Stream of the shuffling generator, kept apart from weight initialization.
const SHUFFLE_STREAM: u64 = 7;

/// Runs `settings.epochs` epochs over `n` samples. `step` receives the
/// sample indices of one mini-batch, must accumulate gradients into `net`
/// and returns the mean loss of the batch. `validate` returns the loss that
/// drives the scheduler, or `None` to use the training loss.
pub fn run_epochs<N: Parameterized>(
    settings: &TrainSettings,
    n: usize,
    net: &mut N,
    mut step: impl FnMut(&mut N, &[usize]) -> Result<f64>,
    mut validate: impl FnMut(&N) -> Option<Result<f64>>,
) -> Result<Vec<EpochLog>> {
    settings.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    rng.set_stream(SHUFFLE_STREAM);
    let mut adam = Adam::new(settings.lr, AdamConfig::default());
    let mut scheduler = PlateauScheduler::new(PlateauConfig {
        factor: settings.scheduler_factor,
        patience: settings.scheduler_patience,
    });
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(settings.epochs);
    for epoch in 0..settings.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(settings.batch_size) {
            net.zero_grad();
            let loss = step(net, batch)?;
            if !loss.is_finite() {
                return Err(Error::Training(format!("non-finite loss {loss} in epoch {}", epoch + 1)));
            }
            adam.step(&mut net.tensors()).map_err(|e| e.context(format!("epoch {}", epoch + 1)))?;
            total += loss * batch.len() as f64;
        }
        let train_loss = total / n as f64;
        let validation_loss = validate(net).transpose()?;
        if let Some(v) = validation_loss.filter(|v| !v.is_finite()) {
            return Err(Error::Training(format!("non-finite validation loss {v} in epoch {}", epoch + 1)));
        }
        history.push(EpochLog { epoch: epoch + 1, train_loss, validation_loss, lr: adam.lr });
        adam.lr = scheduler.update(validation_loss.unwrap_or(train_loss), adam.lr);
    }
    Ok(history)
}
