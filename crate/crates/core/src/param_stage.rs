//! Stage 1: roughness parameters (Sk, Vvv, Vmp) from the filtered BLC stack.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::FilteredBlcStack;
use crate::nn::{Loss, ParamNet};
use crate::surface::{extract_k_params, extract_volume_params, Blc, CoreWindow};
use crate::train::{run_epochs, EpochLog, TrainSettings};

pub const FEATURE_LEN: usize = 12;

/// `[Sk(σ…), Vvv(σ…), Vmp(σ…)]` over the four stack columns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector12(pub [f64; FEATURE_LEN]);

impl FeatureVector12 {
    pub fn new(values: [f64; FEATURE_LEN]) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite feature at index {i}")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64; FEATURE_LEN] {
        &self.0
    }
}

pub fn build_feature_vector(stack: &FilteredBlcStack) -> Result<FeatureVector12> {
    if stack.width() != 4 {
        return Err(Error::invalid(format!("feature vector needs a 4-column stack, got {}", stack.width())));
    }
    let mut out = [0.0; FEATURE_LEN];
    for (i, col) in stack.columns.iter().enumerate() {
        let k = extract_k_params(col.values(), CoreWindow::FullSweep)?;
        let v = extract_volume_params(col.values())?;
        out[i] = k.sk;
        out[4 + i] = v.vvv;
        out[8 + i] = v.vmp;
    }
    FeatureVector12::new(out)
}

/// Sk in µm, Vvv and Vmp in ml/m².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamTriple {
    pub sk: f64,
    pub vvv: f64,
    pub vmp: f64,
}

impl ParamTriple {
    pub fn from_blc(b: &Blc) -> Result<Self> {
        let k = b.k_params()?;
        let v = b.volume_params()?;
        Ok(Self { sk: k.sk, vvv: v.vvv, vmp: v.vmp })
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.sk, self.vvv, self.vmp]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { sk: a[0], vvv: a[1], vmp: a[2] }
    }
}

/// Per-dimension mean and population standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::config("standardizer mean and std differ in length"));
        }
        if let Some(i) = std.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::config(format!("standard deviation of dimension {i} is {}", std[i])));
        }
        Ok(Self { mean, std })
    }

    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::config("cannot fit a standardizer to empty or ragged data"));
        }
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..dim).map(|d| rows.iter().map(|r| r[d]).sum::<f64>() / n).collect();
        let std: Vec<f64> = (0..dim)
            .map(|d| (rows.iter().map(|r| (r[d] - mean[d]).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        Self::new(mean, std).map_err(|e| e.context("degenerate training data"))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.mean.iter().zip(&self.std)).map(|(v, (m, s))| (v - m) / s).collect()
    }

    pub fn destandardize(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(self.mean.iter().zip(&self.std)).map(|(v, (m, s))| v * s + m).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamTrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub loss: Loss,
    pub batch_size: usize,
    pub seed: u64,
    /// Standardize the 12 input features as well as the targets.
    pub standardize_inputs: bool,
    pub scheduler_factor: f64,
    pub scheduler_patience: usize,
}

impl Default for ParamTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            lr: 1e-3,
            loss: Loss::Mae,
            batch_size: 32,
            seed: 0,
            standardize_inputs: true,
            scheduler_factor: 1.0 / 3.0,
            scheduler_patience: 5,
        }
    }
}

impl ParamTrainConfig {
    fn settings(&self) -> TrainSettings {
        TrainSettings {
            epochs: self.epochs,
            lr: self.lr,
            batch_size: self.batch_size,
            seed: self.seed,
            scheduler_factor: self.scheduler_factor,
            scheduler_patience: self.scheduler_patience,
        }
    }
}

/// The trained parameter network with its standardization statistics.
pub struct ParamModel {
    pub net: ParamNet,
    pub targets: Option<Standardizer>,
    pub inputs: Option<Standardizer>,
}

impl ParamModel {
    fn net_input(&self, features: &FeatureVector12) -> Vec<f64> {
        match &self.inputs {
            Some(s) => s.standardize(features.values()),
            None => features.values().to_vec(),
        }
    }

    /// Network output in standardized target units.
    pub fn predict_standardized(&self, features: &FeatureVector12) -> Result<[f64; 3]> {
        let y = self.net.predict(&self.net_input(features), 1)?;
        Ok([y[0], y[1], y[2]])
    }

    pub fn predict(&self, features: &FeatureVector12) -> Result<ParamTriple> {
        predict_params(self, features)
    }
}

pub fn predict_params(model: &ParamModel, features: &FeatureVector12) -> Result<ParamTriple> {
    let s = model.targets.as_ref().ok_or_else(|| Error::State("parameter model has no standardizer".into()))?;
    let z = model.predict_standardized(features)?;
    let p = s.destandardize(&z);
    Ok(ParamTriple { sk: p[0], vvv: p[1], vmp: p[2] })
}

pub struct ParamTraining {
    pub model: ParamModel,
    pub history: Vec<EpochLog>,
}

/// Fit the standardizer on the targets and train the network on them.
/// `validation` drives the plateau scheduler when given, the training loss
/// otherwise.
pub fn train_params(
    train: &[(FeatureVector12, ParamTriple)],
    validation: Option<&[(FeatureVector12, ParamTriple)]>,
    config: &ParamTrainConfig,
) -> Result<ParamTraining> {
    if train.len() < 2 {
        return Err(Error::invalid(format!("parameter training needs at least 2 samples, got {}", train.len())));
    }
    let targets = Standardizer::fit(&train.iter().map(|(_, p)| p.to_array().to_vec()).collect::<Vec<_>>())?;
    let inputs = if config.standardize_inputs {
        Some(Standardizer::fit(&train.iter().map(|(f, _)| f.values().to_vec()).collect::<Vec<_>>())?)
    } else {
        None
    };
    let mut model = ParamModel { net: ParamNet::new(config.seed), targets: Some(targets), inputs };

    let encode = |model: &ParamModel, set: &[(FeatureVector12, ParamTriple)]| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let t = model.targets.as_ref().expect("fitted");
        set.iter().map(|(f, p)| (model.net_input(f), t.standardize(&p.to_array()))).unzip()
    };
    let (xs, ys) = encode(&model, train);
    let val = validation.map(|v| encode(&model, v));
    let loss = config.loss;

    let history = run_epochs(&config.settings(), train.len(), &mut model.net, |net, batch| {
        let x: Vec<f64> = batch.iter().flat_map(|&i| xs[i].iter().copied()).collect();
        let y: Vec<f64> = batch.iter().flat_map(|&i| ys[i].iter().copied()).collect();
        let pred = net.forward(&x, batch.len())?;
        let value = loss.value(&pred, &y)?;
        net.backward(&loss.gradient(&pred, &y, 1.0)?)?;
        Ok(value)
    }, |net| {
        let (vx, vy) = val.as_ref()?;
        let x: Vec<f64> = vx.iter().flatten().copied().collect();
        let y: Vec<f64> = vy.iter().flatten().copied().collect();
        Some(net.predict(&x, vx.len()).and_then(|p| loss.value(&p, &y)))
    })?;
    Ok(ParamTraining { model, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ParamNet;

    fn linear_stack(k: usize) -> FilteredBlcStack {
        let col = Blc::new((1..=k).map(|i| 1.0 - 2.0 * i as f64 / (k + 1) as f64).collect()).unwrap();
        FilteredBlcStack::new(vec![8.0, 16.0, 32.0, 64.0], vec![col; 4]).unwrap()
    }

    #[test]
    fn features_of_linear_and_constant_stacks() {
        let k = 512;
        let f = build_feature_vector(&linear_stack(k)).unwrap();
        let tol = 4.0 / k as f64;
        for i in 0..4 {
            assert!((f.0[i] - 2.0).abs() < tol);
            assert!((f.0[4 + i] - 0.04).abs() < tol);
            assert!((f.0[8 + i] - 0.01).abs() < tol);
        }
        let flat = FilteredBlcStack::new(vec![8.0, 16.0, 32.0, 64.0], vec![Blc::new(vec![0.2; 32]).unwrap(); 4]).unwrap();
        assert_eq!(build_feature_vector(&flat).unwrap().0, [0.0; 12]);
    }

    #[test]
    fn feature_order_is_family_major() {
        let k = 256;
        let cols: Vec<Blc> = (1..=4)
            .map(|s| Blc::new((1..=k).map(|i| s as f64 * (1.0 - 2.0 * i as f64 / (k + 1) as f64)).collect()).unwrap())
            .collect();
        let stack = FilteredBlcStack::new(vec![8.0, 16.0, 32.0, 64.0], cols.clone()).unwrap();
        let f = build_feature_vector(&stack).unwrap();
        for (i, c) in cols.iter().enumerate() {
            assert_eq!(f.0[i], c.k_params().unwrap().sk);
            assert_eq!(f.0[4 + i], c.volume_params().unwrap().vvv);
            assert_eq!(f.0[8 + i], c.volume_params().unwrap().vmp);
        }
    }

    #[test]
    fn zero_network_predicts_means() {
        let model = ParamModel {
            net: ParamNet::zeros(),
            targets: Some(Standardizer::new(vec![1.21, 0.15, 0.0258], vec![0.3, 0.05, 0.01]).unwrap()),
            inputs: None,
        };
        let p = predict_params(&model, &FeatureVector12([0.5; 12])).unwrap();
        assert_eq!(p, ParamTriple { sk: 1.21, vvv: 0.15, vmp: 0.0258 });
        let bare = ParamModel { net: ParamNet::zeros(), targets: None, inputs: None };
        assert!(matches!(predict_params(&bare, &FeatureVector12([0.0; 12])), Err(Error::State(_))));
    }

    #[test]
    fn standardizer_round_trip_and_degenerate() {
        let s = Standardizer::fit(&[vec![1.0, 5.0], vec![3.0, 9.0], vec![2.0, 1.0]]).unwrap();
        let x = [2.7, -4.0];
        let back = s.destandardize(&s.standardize(&x));
        assert!(back.iter().zip(x).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(matches!(Standardizer::fit(&[vec![1.0], vec![1.0]]), Err(Error::Config(_))));
    }

    #[test]
    fn training_needs_two_samples_and_variance() {
        let f = FeatureVector12([0.1; 12]);
        let p = ParamTriple { sk: 1.0, vvv: 0.1, vmp: 0.01 };
        let cfg = ParamTrainConfig { epochs: 1, ..Default::default() };
        assert!(matches!(train_params(&[(f, p)], None, &cfg), Err(Error::InvalidInput(_))));
        assert!(matches!(train_params(&[(f, p), (f, p)], None, &cfg), Err(Error::Config(_))));
    }
}
