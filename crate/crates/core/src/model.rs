//! The trained two-stage model, its weight bundle and the image-to-BLC
//! transfer.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::blc_stage::assemble_input;
use crate::error::{Error, Result};
use crate::image::{FilteredBlcStack, PreprocessConfig, Preprocessor, ReflectionImage};
use crate::isotonic::project_non_increasing;
use crate::nn::{
    decode_weights, encode_weights, scatter_params, BlcNet, ConvShape, DenseShape, ParamNet, BLC_CHANNELS,
    BLC_KERNEL, PARAM_WIDTHS,
};
use crate::param_stage::{build_feature_vector, ParamModel, ParamTriple, Standardizer};
use crate::surface::Blc;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;
pub const ARCHITECTURE_ID: &str = "param-dense-12-3+blc-conv-7-1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleHeader {
    pub format_version: u32,
    pub architecture: String,
    pub param_layers: Vec<DenseShape>,
    pub blc_layers: Vec<ConvShape>,
    pub param_count: usize,
    pub target_standardizer: Standardizer,
    pub input_standardizer: Option<Standardizer>,
    pub preprocess: PreprocessConfig,
    /// Training configuration echo.
    pub config: serde_json::Value,
}

pub struct ModelBundle {
    pub param: ParamModel,
    pub blc: BlcNet,
    pub preprocess: PreprocessConfig,
    pub config: serde_json::Value,
    preprocessor: Preprocessor,
}

/// Output of [`predict_transfer`].
#[derive(Clone, Debug, PartialEq)]
pub struct Transfer {
    /// Stage-2 output after monotone projection.
    pub blc: Blc,
    /// Parameters extracted from the projected BLC.
    pub params: ParamTriple,
    /// Direct stage-1 prediction.
    pub stage1: ParamTriple,
    /// Whether the raw network output was already non-increasing.
    pub raw_monotone: bool,
}

fn standard_dense_shapes() -> Vec<DenseShape> {
    PARAM_WIDTHS.windows(2).map(|w| DenseShape { inputs: w[0], outputs: w[1] }).collect()
}

fn standard_conv_shapes() -> Vec<ConvShape> {
    BLC_CHANNELS.windows(2).map(|w| ConvShape { inputs: w[0], outputs: w[1], kernel: BLC_KERNEL }).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl ModelBundle {
    pub fn new(param: ParamModel, blc: BlcNet, preprocess: PreprocessConfig, config: serde_json::Value) -> Result<Self> {
        if param.targets.is_none() {
            return Err(Error::State("parameter model has no standardizer".into()));
        }
        let preprocessor = Preprocessor::new(preprocess.clone())?;
        Ok(Self { param, blc, preprocess, config, preprocessor })
    }

    pub fn preprocessor(&self) -> &Preprocessor {
        &self.preprocessor
    }

    fn header(&self) -> BundleHeader {
        let param_layers: Vec<DenseShape> = self.param.net.layers.iter().map(|l| l.shape).collect();
        let blc_layers: Vec<ConvShape> = self.blc.convs.iter().map(|l| l.shape).collect();
        let param_count = param_layers.iter().map(DenseShape::param_count).sum::<usize>()
            + blc_layers.iter().map(ConvShape::param_count).sum::<usize>();
        BundleHeader {
            format_version: BUNDLE_FORMAT_VERSION,
            architecture: ARCHITECTURE_ID.into(),
            param_layers,
            blc_layers,
            param_count,
            target_standardizer: self.param.targets.clone().expect("checked at construction"),
            input_standardizer: self.param.inputs.clone(),
            preprocess: self.preprocess.clone(),
            config: self.config.clone(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut tensors: Vec<&[f64]> = Vec::new();
        for l in &self.param.net.layers {
            tensors.push(&l.weights);
            tensors.push(&l.bias);
        }
        for l in &self.blc.convs {
            tensors.push(&l.weights);
            tensors.push(&l.bias);
        }
        encode_weights(&self.header(), &tensors)
    }

    /// Decode a bundle; both architectures must match the standard layer
    /// shapes exactly.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (h, values): (BundleHeader, Vec<f64>) = decode_weights(bytes)?;
        if h.format_version != BUNDLE_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!("unsupported bundle version {}", h.format_version)));
        }
        if h.architecture != ARCHITECTURE_ID {
            return Err(Error::ModelFormat(format!("unknown architecture {:?}", h.architecture)));
        }
        if h.param_layers != standard_dense_shapes() {
            return Err(Error::ModelFormat("parameter network layers do not match the standard architecture".into()));
        }
        if h.blc_layers != standard_conv_shapes() {
            return Err(Error::ModelFormat("BLC network layers do not match the standard architecture".into()));
        }
        let mut param_net = ParamNet::zeros();
        let mut blc = BlcNet::zeros();
        let count = param_net.layer_param_counts().iter().sum::<usize>() + blc.layer_param_counts().iter().sum::<usize>();
        if h.param_count != count {
            return Err(Error::ModelFormat(format!("header declares {} parameters, architecture has {count}", h.param_count)));
        }
        {
            let mut tensors: Vec<&mut [f64]> = Vec::new();
            for l in param_net.layers.iter_mut() {
                tensors.push(&mut l.weights);
                tensors.push(&mut l.bias);
            }
            for l in blc.convs.iter_mut() {
                tensors.push(&mut l.weights);
                tensors.push(&mut l.bias);
            }
            scatter_params(&values, &mut tensors)?;
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::ModelFormat(format!("non-finite parameter at index {i}")));
        }
        let param = ParamModel { net: param_net, targets: Some(h.target_standardizer), inputs: h.input_standardizer };
        Self::new(param, blc, h.preprocess, h.config).map_err(|e| match e {
            Error::Config(m) | Error::State(m) => Error::ModelFormat(m),
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::from(e).context(path.display()))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::from(e).context(path.display()))?;
        Self::from_bytes(&bytes).map_err(|e| e.context(path.display()))
    }

    /// Both stages on an already computed stack.
    pub fn predict_stack(&self, stack: &FilteredBlcStack) -> Result<Transfer> {
        if stack.k() != self.preprocess.k {
            return Err(Error::invalid(format!("stack has K={}, model expects {}", stack.k(), self.preprocess.k)));
        }
        let features = build_feature_vector(stack)?;
        let z = self.param.predict_standardized(&features)?;
        let stage1 = self.param.predict(&features)?;
        let raw = self.blc.predict(&assemble_input(stack, &z)?)?;
        let raw_monotone = raw.windows(2).all(|w| w[0] >= w[1]);
        let blc = Blc::new(project_non_increasing(&raw))?;
        let params = ParamTriple::from_blc(&blc)?;
        Ok(Transfer { blc, params, stage1, raw_monotone })
    }
}

/// Resize, filter stack, stage 1, signal assembly, stage 2 and monotone
/// projection.
pub fn predict_transfer(model: &ModelBundle, img: &ReflectionImage) -> Result<Transfer> {
    model.predict_stack(&model.preprocessor.stack(img)?)
}

/// JSON sidecar written next to each predicted BLC.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub k: usize,
    pub params: ParamTriple,
    pub stage1_params: ParamTriple,
    pub monotone_projection: bool,
    pub raw_output_monotone: bool,
    pub model_sha256: String,
    pub input_sha256: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_bundle(k: usize) -> ModelBundle {
        let param = ParamModel {
            net: ParamNet::zeros(),
            targets: Some(Standardizer::new(vec![1.2, 0.15, 0.02], vec![0.3, 0.02, 0.01]).unwrap()),
            inputs: None,
        };
        let pre = PreprocessConfig { k, resize: Some([64, 64]), ..Default::default() };
        ModelBundle::new(param, BlcNet::zeros(), pre, serde_json::json!({"seed": 3})).unwrap()
    }

    #[test]
    fn zero_model_predicts_zero_curve() {
        let img = crate::synth::render_reflection(
            &crate::synth::generate_surface(&crate::synth::SurfaceRecipe { rows: 48, cols: 48, ..Default::default() }).unwrap(),
            &crate::synth::SurfaceRecipe::default(),
        )
        .unwrap();
        let m = zero_bundle(32);
        let t = predict_transfer(&m, &img).unwrap();
        assert_eq!(t.blc.values(), &[0.0; 32]);
        assert_eq!(t.stage1, ParamTriple { sk: 1.2, vvv: 0.15, vmp: 0.02 });
        assert_eq!(predict_transfer(&m, &img).unwrap(), t);
    }

    #[test]
    fn bundle_round_trip() {
        let mut m = zero_bundle(16);
        m.param.net.layers[1].weights[5] = 0.25;
        m.blc.convs[8].bias[0] = -1.5;
        let bytes = m.to_bytes().unwrap();
        let back = ModelBundle::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes().unwrap(), bytes);
        assert_eq!(back.blc.convs[8].bias[0], -1.5);
        assert_eq!(back.config["seed"], 3);
    }

    #[test]
    fn corrupt_bundles_are_rejected() {
        let bytes = zero_bundle(16).to_bytes().unwrap();
        assert!(matches!(ModelBundle::from_bytes(&bytes[..bytes.len() - 8]), Err(Error::ModelFormat(_))));
        let text = String::from_utf8_lossy(&bytes[..bytes.iter().position(|&b| b == b'\n').unwrap()]).to_string();
        let changed = text.replacen("\"outputs\":64", "\"outputs\":65", 1);
        let mut bad = changed.into_bytes();
        bad.extend_from_slice(&bytes[bytes.iter().position(|&b| b == b'\n').unwrap()..]);
        assert!(matches!(ModelBundle::from_bytes(&bad), Err(Error::ModelFormat(_))));
    }

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
