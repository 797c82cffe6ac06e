//! Synthetic plateau-honed surfaces and their reflection images.
//!
//! A surface is two families of narrow sinusoidal grooves crossing at
//! `±groove_angle`, on top of a smooth random plateau texture. Wear truncates
//! the highest `30 % · w` of the heights. The reflection image is Lambertian
//! shading of the height gradient, darkened with depth below the highest
//! point, modulated by a smooth illumination field and pixel noise.

mod dataset;

pub use dataset::{generate_dataset, synthesize_pairs, DatasetConfig, RecipeRanges, SyntheticPair};

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ReflectionImage;
use crate::surface::DepthProfile;

/// Sharpness exponent of the groove valleys.
const GROOVE_SHARPNESS: i32 = 8;
/// Correlation length of the plateau texture, in pixels.
const PLATEAU_CORRELATION_PX: f64 = 2.5;
/// Highest fraction of heights removed at full wear.
const MAX_TRUNCATION: f64 = 0.3;
/// Fine polish texture left on the plateaus after truncation, µm.
const POLISH_ROUGHNESS_UM: f64 = 0.05;
const LIGHT_ELEVATION_DEG: f64 = 55.0;
const LIGHT_AZIMUTH_DEG: f64 = 80.0;
const AMBIENT: f64 = 0.15;
/// Depth below the highest point at which groove brightness drops by 1/e, µm.
const OCCLUSION_DEPTH_UM: f64 = 1.0;
/// Mean gray level of the rendering before tint, in `[0, 1]`.
const BASE_LEVEL: f64 = 0.62;
const TINT: [f64; 3] = [0.97, 1.0, 1.04];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurfaceRecipe {
    /// Half-angle of the cross-hatch, degrees from the horizontal axis.
    pub groove_angle_deg: f64,
    /// Distance between neighbouring grooves of one family, µm.
    pub groove_spacing_um: f64,
    /// Depth of a groove valley, µm.
    pub groove_depth_um: f64,
    /// Standard deviation of the plateau texture, µm.
    pub plateau_roughness_um: f64,
    /// Wear level in `[0, 1]`.
    pub wear: f64,
    /// Relative amplitude of the low-frequency illumination field.
    pub illumination_amplitude: f64,
    /// Standard deviation of the pixel noise, gray levels in `[0, 1]`.
    pub noise_level: f64,
    pub rows: usize,
    pub cols: usize,
    /// µm per pixel.
    pub pixel_pitch_um: f64,
    pub seed: u64,
}

impl Default for SurfaceRecipe {
    fn default() -> Self {
        Self {
            groove_angle_deg: 25.0,
            groove_spacing_um: 48.0,
            groove_depth_um: 2.2,
            plateau_roughness_um: 0.33,
            wear: 0.5,
            illumination_amplitude: 0.25,
            noise_level: 0.02,
            rows: 128,
            cols: 128,
            pixel_pitch_um: 4.0,
            seed: 0,
        }
    }
}

impl SurfaceRecipe {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.wear) {
            return Err(Error::config(format!("wear must lie in [0, 1], got {}", self.wear)));
        }
        let scales = [
            ("groove_spacing_um", self.groove_spacing_um),
            ("groove_depth_um", self.groove_depth_um),
            ("plateau_roughness_um", self.plateau_roughness_um),
            ("pixel_pitch_um", self.pixel_pitch_um),
        ];
        for (name, v) in scales {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("illumination_amplitude", self.illumination_amplitude), ("noise_level", self.noise_level)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !self.groove_angle_deg.is_finite() {
            return Err(Error::config("groove angle must be finite"));
        }
        if self.rows < crate::image::MIN_IMAGE_SIDE || self.cols < crate::image::MIN_IMAGE_SIDE {
            return Err(Error::config(format!("surface must be at least 16x16, got {}x{}", self.rows, self.cols)));
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Periodic separable Gaussian smoothing of a row-major grid.
fn smooth_periodic(values: &[f64], rows: usize, cols: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-radius..=radius).map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let norm: f64 = taps.iter().sum();
    let (r, c) = (rows as isize, cols as isize);
    let mut tmp = vec![0.0; values.len()];
    for y in 0..r {
        for x in 0..c {
            let mut acc = 0.0;
            for (t, w) in taps.iter().enumerate() {
                let xx = (x + t as isize - radius).rem_euclid(c);
                acc += w * values[(y * c + xx) as usize];
            }
            tmp[(y * c + x) as usize] = acc / norm;
        }
    }
    let mut out = vec![0.0; values.len()];
    for y in 0..r {
        for x in 0..c {
            let mut acc = 0.0;
            for (t, w) in taps.iter().enumerate() {
                let yy = (y + t as isize - radius).rem_euclid(r);
                acc += w * tmp[(yy * c + x) as usize];
            }
            out[(y * c + x) as usize] = acc / norm;
        }
    }
    out
}

fn standardize(values: &mut [f64]) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    values.iter_mut().for_each(|v| *v = (*v - mean) / sd);
}

fn gaussian_field(rng: &mut ChaCha8Rng, rows: usize, cols: usize, sigma: f64) -> Vec<f64> {
    let noise: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    let mut field = smooth_periodic(&noise, rows, cols, sigma);
    standardize(&mut field);
    field
}

/// Height map of the recipe, mean-centred, values representable as `f32`.
pub fn generate_surface(recipe: &SurfaceRecipe) -> Result<DepthProfile> {
    recipe.validate()?;
    let (rows, cols) = (recipe.rows, recipe.cols);
    let mut rng = recipe.rng(1);
    let phases: [f64; 2] = [rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)];
    let plateau = gaussian_field(&mut rng, rows, cols, PLATEAU_CORRELATION_PX);
    // slowly varying groove depth so valleys are not all alike
    let depth_mod = gaussian_field(&mut rng, rows, cols, 8.0);

    let theta = recipe.groove_angle_deg.to_radians();
    let dirs = [(theta.cos(), theta.sin()), (theta.cos(), -theta.sin())];
    let k = 2.0 * PI / recipe.groove_spacing_um;
    let mut heights = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let (x, y) = (c as f64 * recipe.pixel_pitch_um, r as f64 * recipe.pixel_pitch_um);
            let i = r * cols + c;
            let depth = recipe.groove_depth_um * (1.0 + 0.25 * depth_mod[i]).max(0.2);
            let mut h = recipe.plateau_roughness_um * plateau[i];
            for ((dx, dy), phase) in dirs.iter().zip(phases) {
                let s = k * (x * dy + y * dx) + phase;
                h -= depth * (0.5 * (1.0 + s.cos())).powi(GROOVE_SHARPNESS);
            }
            heights.push(h);
        }
    }

    if recipe.wear > 0.0 {
        let mut sorted = heights.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        let q = 1.0 - MAX_TRUNCATION * recipe.wear;
        let idx = ((q * (sorted.len() - 1) as f64).round() as usize).min(sorted.len() - 1);
        let cap = sorted[idx];
        heights.iter_mut().for_each(|h| *h = h.min(cap));
    }
    let polish = gaussian_field(&mut rng, rows, cols, 1.0);
    heights.iter_mut().zip(&polish).for_each(|(h, p)| *h += POLISH_ROUGHNESS_UM * p);
    let mean = heights.iter().sum::<f64>() / heights.len() as f64;
    heights.iter_mut().for_each(|h| *h = (*h - mean) as f32 as f64);
    Ok(DepthProfile::new(rows, cols, heights)?.with_pixel_pitch(recipe.pixel_pitch_um))
}

/// Smooth multiplicative illumination field around 1.
fn illumination_field(recipe: &SurfaceRecipe, rows: usize, cols: usize) -> Vec<f64> {
    if recipe.illumination_amplitude == 0.0 {
        return vec![1.0; rows * cols];
    }
    let mut rng = recipe.rng(2);
    let angle: f64 = rng.random_range(0.0..2.0 * PI);
    let phase: f64 = rng.random_range(0.0..2.0 * PI);
    let (ca, sa) = (angle.cos(), angle.sin());
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let u = c as f64 / cols as f64 - 0.5;
            let v = r as f64 / rows as f64 - 0.5;
            let t = u * ca + v * sa;
            let wave = (PI * (u * sa - v * ca) + phase).sin();
            out.push(1.0 + recipe.illumination_amplitude * (0.7 * 2.0 * t + 0.3 * wave));
        }
    }
    out
}

/// Lambertian rendering of `depth` with illumination and noise from `recipe`.
pub fn render_reflection(depth: &DepthProfile, recipe: &SurfaceRecipe) -> Result<ReflectionImage> {
    let (rows, cols) = (depth.rows(), depth.cols());
    let pitch = recipe.pixel_pitch_um;
    let el = LIGHT_ELEVATION_DEG.to_radians();
    let az = LIGHT_AZIMUTH_DEG.to_radians();
    let light = [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()];
    let illum = illumination_field(recipe, rows, cols);
    let mut rng = recipe.rng(3);
    let top = depth.heights().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut data = Vec::with_capacity(rows * cols * 3);
    for r in 0..rows {
        for c in 0..cols {
            let h = |rr: usize, cc: usize| depth.get(rr, cc);
            let gx = (h(r, (c + 1).min(cols - 1)) - h(r, c.saturating_sub(1))) / (2.0 * pitch);
            let gy = (h((r + 1).min(rows - 1), c) - h(r.saturating_sub(1), c)) / (2.0 * pitch);
            let norm = (gx * gx + gy * gy + 1.0).sqrt();
            let lambert = ((-gx * light[0] - gy * light[1] + light[2]) / norm).max(0.0);
            let flat = light[2];
            let occlusion = (-(top - h(r, c)) / OCCLUSION_DEPTH_UM).exp();
            let shade = (AMBIENT + (1.0 - AMBIENT) * lambert / flat) * occlusion;
            let noise = if recipe.noise_level > 0.0 {
                recipe.noise_level * Distribution::<f64>::sample(&StandardNormal, &mut rng)
            } else {
                0.0
            };
            let g = BASE_LEVEL * shade * illum[r * cols + c] / (AMBIENT + 1.0 - AMBIENT) + noise;
            for t in TINT {
                data.push((255.0 * g * t).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    ReflectionImage::new(rows, cols, data)
}
