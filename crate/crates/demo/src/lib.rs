//! Browser bindings: a synthetic honed surface whose wear and groove depth
//! are driven by sliders, its BLC with roughness parameters, and the
//! Gaussian high-pass preview of its reflection image.

use blc_core::image::{highpass_filter, to_grayscale, GrayProfile, ReflectionImage};
use blc_core::surface::{compute_blc, Blc, DepthProfile};
use blc_core::synth::{generate_surface, render_reflection, SurfaceRecipe};
use wasm_bindgen::prelude::*;

fn js_err(e: blc_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn rgba_from_rgb(img: &ReflectionImage) -> Vec<u8> {
    img.data().chunks(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect()
}

/// Gray values mapped linearly from their own range onto 0..255.
fn rgba_from_gray(g: &GrayProfile) -> Vec<u8> {
    let (lo, hi) = g.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    g.values()
        .iter()
        .flat_map(|&v| {
            let u = (255.0 * (v - lo) / span).round() as u8;
            [u, u, u, 255]
        })
        .collect()
}

/// Sk, Spk, Svk, SMr1, SMr2, Vmp, Vvv, Vmc, Vvc in that order.
fn param_vector(b: &Blc) -> Result<Vec<f64>, JsError> {
    let k = b.k_params().map_err(js_err)?;
    let v = b.volume_params().map_err(js_err)?;
    Ok(vec![k.sk, k.spk, k.svk, k.smr1, k.smr2, v.vmp, v.vvv, v.vmc, v.vvc])
}

#[wasm_bindgen]
pub struct Demo {
    recipe: SurfaceRecipe,
    depth: DepthProfile,
    image: ReflectionImage,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(size: usize, seed: u64) -> Result<Demo, JsError> {
        let recipe = SurfaceRecipe { rows: size, cols: size, seed, ..Default::default() };
        let depth = generate_surface(&recipe).map_err(js_err)?;
        let image = render_reflection(&depth, &recipe).map_err(js_err)?;
        Ok(Demo { recipe, depth, image })
    }

    pub fn size(&self) -> usize {
        self.recipe.rows
    }

    /// Regenerate with new wear level and groove depth (µm).
    pub fn update(&mut self, wear: f64, groove_depth_um: f64, illumination: f64) -> Result<(), JsError> {
        let recipe = SurfaceRecipe {
            wear,
            groove_depth_um,
            illumination_amplitude: illumination,
            ..self.recipe.clone()
        };
        self.depth = generate_surface(&recipe).map_err(js_err)?;
        self.image = render_reflection(&self.depth, &recipe).map_err(js_err)?;
        self.recipe = recipe;
        Ok(())
    }

    /// Reflection image as RGBA bytes for an `ImageData`.
    pub fn image_rgba(&self) -> Vec<u8> {
        rgba_from_rgb(&self.image)
    }

    /// Depth map scaled to gray, RGBA.
    pub fn depth_rgba(&self) -> Result<Vec<u8>, JsError> {
        let g = GrayProfile::new(self.depth.rows(), self.depth.cols(), self.depth.heights().to_vec()).map_err(js_err)?;
        Ok(rgba_from_gray(&g))
    }

    /// High-pass filtered grayscale reflection, RGBA.
    pub fn highpass_rgba(&self, sigma: f64) -> Result<Vec<u8>, JsError> {
        let f = highpass_filter(&to_grayscale(&self.image), sigma).map_err(js_err)?;
        Ok(rgba_from_gray(&f))
    }

    /// BLC of the depth profile at `k` material ratios.
    pub fn depth_blc(&self, k: usize) -> Result<Vec<f64>, JsError> {
        Ok(compute_blc(&self.depth, k).map_err(js_err)?.into_values())
    }

    /// BLC of the high-pass filtered reflection at `k` material ratios.
    pub fn highpass_blc(&self, sigma: f64, k: usize) -> Result<Vec<f64>, JsError> {
        let f = highpass_filter(&to_grayscale(&self.image), sigma).map_err(js_err)?;
        let p = f.to_depth_profile().map_err(js_err)?;
        Ok(compute_blc(&p, k).map_err(js_err)?.into_values())
    }

    /// Roughness parameters of the depth BLC, see [`blc_params`].
    pub fn depth_params(&self, k: usize) -> Result<Vec<f64>, JsError> {
        param_vector(&compute_blc(&self.depth, k).map_err(js_err)?)
    }
}

/// Sk, Spk, Svk, SMr1, SMr2, Vmp, Vvv, Vmc, Vvc of a non-increasing curve.
#[wasm_bindgen]
pub fn blc_params(values: Vec<f64>) -> Result<Vec<f64>, JsError> {
    param_vector(&Blc::new(values).map_err(js_err)?)
}
