//! Bearing load curve (BLC) prediction for honed cylinder-liner surfaces.
//!
//! The crate covers the whole chain from an RGB reflection image to a
//! predicted BLC of the corresponding depth profile:
//!
//! * [`surface`]: depth profiles, BLCs, Wasserstein-1 and roughness parameters
//! * [`image`]: grayscale, Gaussian high-pass bank and the filtered BLC stack
//! * [`nn`]: a small deterministic network engine with exact gradients
//! * [`param_stage`] and [`blc_stage`]: the two trained prediction stages
//! * [`model`]: the weight bundle and the full image-to-BLC transfer
//! * [`synth`]: synthetic honed surfaces and reflection renderings
//! * [`pipeline`]: manifests, grouped splits, augmentation, evaluation

pub mod error;
pub mod blc_stage;
pub mod image;
pub mod isotonic;
pub mod model;
pub mod nn;
pub mod param_stage;
pub mod pipeline;
pub mod surface;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
