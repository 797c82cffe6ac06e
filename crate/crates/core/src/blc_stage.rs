//! Stage 2: the full BLC from the filtered stack plus broadcast parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::FilteredBlcStack;
use crate::isotonic::monotone_blc;
use crate::nn::{BlcNet, Loss, Signal};
use crate::surface::Blc;
use crate::train::{run_epochs, EpochLog, TrainSettings};

pub const SIGNAL_CHANNELS: usize = 7;

/// Stack columns as channels 0..4, then one constant channel per
/// standardized parameter.
pub fn assemble_input(stack: &FilteredBlcStack, params_std: &[f64]) -> Result<Signal> {
    if stack.width() != 4 {
        return Err(Error::invalid(format!("expected a 4-column stack, got {}", stack.width())));
    }
    if params_std.len() != 3 {
        return Err(Error::invalid(format!("expected 3 parameters, got {}", params_std.len())));
    }
    let k = stack.k();
    let mut data = Vec::with_capacity(SIGNAL_CHANNELS * k);
    for col in &stack.columns {
        data.extend_from_slice(col.values());
    }
    for &p in params_std {
        data.extend(std::iter::repeat_n(p, k));
    }
    Signal::new(SIGNAL_CHANNELS, k, data)
}

/// Raw network output; not necessarily monotone.
pub fn predict_blc_raw(net: &BlcNet, signal: &Signal) -> Result<Vec<f64>> {
    net.predict(signal)
}

/// Network output projected onto non-increasing curves.
pub fn predict_blc(net: &BlcNet, signal: &Signal) -> Result<Blc> {
    monotone_blc(&net.predict(signal)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlcTrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub scheduler_factor: f64,
    pub scheduler_patience: usize,
}

impl Default for BlcTrainConfig {
    fn default() -> Self {
        Self { epochs: 40, lr: 4e-4, batch_size: 8, seed: 0, scheduler_factor: 1.0 / 3.0, scheduler_patience: 5 }
    }
}

pub struct BlcTraining {
    pub net: BlcNet,
    pub history: Vec<EpochLog>,
}

fn check_pairs(set: &[(Signal, Blc)]) -> Result<()> {
    for (i, (x, b)) in set.iter().enumerate() {
        if x.channels != SIGNAL_CHANNELS || x.len != b.k() {
            return Err(Error::invalid(format!(
                "pair {i}: signal {}x{} does not match a BLC of K={}",
                x.channels,
                x.len,
                b.k()
            )));
        }
    }
    Ok(())
}

/// Minimize the mean Wasserstein-1 distance between predicted and true BLCs.
pub fn train_blc(
    train: &[(Signal, Blc)],
    validation: Option<&[(Signal, Blc)]>,
    config: &BlcTrainConfig,
) -> Result<BlcTraining> {
    if train.len() < 2 {
        return Err(Error::invalid(format!("BLC training needs at least 2 samples, got {}", train.len())));
    }
    check_pairs(train)?;
    if let Some(v) = validation {
        check_pairs(v)?;
    }
    let settings = TrainSettings {
        epochs: config.epochs,
        lr: config.lr,
        batch_size: config.batch_size,
        seed: config.seed,
        scheduler_factor: config.scheduler_factor,
        scheduler_patience: config.scheduler_patience,
    };
    let mut net = BlcNet::new(config.seed);
    let history = run_epochs(
        &settings,
        train.len(),
        &mut net,
        |net, batch| {
            let scale = 1.0 / batch.len() as f64;
            let mut total = 0.0;
            for &i in batch {
                let (x, target) = &train[i];
                let pred = net.forward(x)?;
                total += Loss::Mae.value(&pred, target.values())?;
                net.backward(&Loss::Mae.gradient(&pred, target.values(), scale)?)?;
            }
            Ok(total * scale)
        },
        |net| {
            let v = validation?;
            Some(mean_w1(net, v))
        },
    )?;
    Ok(BlcTraining { net, history })
}

/// Mean raw-output Wasserstein-1 distance over a set.
pub fn mean_w1(net: &BlcNet, set: &[(Signal, Blc)]) -> Result<f64> {
    let mut total = 0.0;
    for (x, b) in set {
        total += Loss::Mae.value(&net.predict(x)?, b.values())?;
    }
    Ok(total / set.len().max(1) as f64)
}
