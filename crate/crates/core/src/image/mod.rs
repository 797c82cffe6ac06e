//! RGB reflection images and the preprocessing transform that turns them into
//! a stack of high-pass filtered BLCs.

mod fourier;
mod png_io;
mod psi;

pub use fourier::{highpass_filter, highpass_mask, Fft2d};
pub use png_io::{decode_png, encode_png, load_png, save_png};
pub use psi::{psi_transform, FilteredBlcStack, PreprocessConfig, Preprocessor, PSI_SIGMAS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest accepted image side length.
pub const MIN_IMAGE_SIDE: usize = 16;

/// 8-bit RGB image, row-major with interleaved channels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReflectionImage {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
    pub source: String,
}

impl ReflectionImage {
    pub fn new(rows: usize, cols: usize, data: Vec<u8>) -> Result<Self> {
        if rows < MIN_IMAGE_SIDE || cols < MIN_IMAGE_SIDE {
            return Err(Error::invalid(format!(
                "images must be at least {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}, got {rows}x{cols}"
            )));
        }
        Self::new_unchecked_size(rows, cols, data)
    }

    /// Like [`ReflectionImage::new`] but without the minimum side length;
    /// used for small intermediate buffers.
    pub fn new_unchecked_size(rows: usize, cols: usize, data: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols * 3 {
            return Err(Error::invalid(format!(
                "RGB buffer of {} bytes does not match {rows}x{cols}x3",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data, source: String::new() })
    }

    /// From wider integer channels, rejecting anything outside `[0, 255]`.
    pub fn from_channels(rows: usize, cols: usize, channels: &[i32]) -> Result<Self> {
        let data = channels
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                u8::try_from(c).map_err(|_| {
                    Error::invalid(format!("channel value {c} at index {i} outside [0, 255]"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, cols, data)
    }

    pub fn filled(rows: usize, cols: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::new(rows, cols, rgb.repeat(rows * cols))
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, r: usize, c: usize) -> [u8; 3] {
        let i = 3 * (r * self.cols + c);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Upside-down copy (row order reversed).
    pub fn flip_vertical(&self) -> Self {
        let stride = self.cols * 3;
        let data = self.data.chunks_exact(stride).rev().flatten().copied().collect();
        Self { rows: self.rows, cols: self.cols, data, source: self.source.clone() }
    }

    /// Separable Gaussian blur with clamped borders; `sigma <= 0` is a copy.
    pub fn gaussian_blur(&self, sigma: f64) -> Self {
        if sigma <= 0.0 {
            return self.clone();
        }
        let radius = (3.0 * sigma).ceil() as isize;
        let taps: Vec<f64> = (-radius..=radius)
            .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let norm: f64 = taps.iter().sum();
        let taps: Vec<f64> = taps.iter().map(|t| t / norm).collect();

        let (rows, cols) = (self.rows as isize, self.cols as isize);
        let src: Vec<f64> = self.data.iter().map(|&v| v as f64).collect();
        let mut tmp = vec![0.0; src.len()];
        for r in 0..rows {
            for c in 0..cols {
                for ch in 0..3 {
                    let mut acc = 0.0;
                    for (t, w) in taps.iter().enumerate() {
                        let cc = (c + t as isize - radius).clamp(0, cols - 1);
                        acc += w * src[((r * cols + cc) * 3 + ch) as usize];
                    }
                    tmp[((r * cols + c) * 3 + ch) as usize] = acc;
                }
            }
        }
        let mut data = vec![0u8; src.len()];
        for r in 0..rows {
            for c in 0..cols {
                for ch in 0..3 {
                    let mut acc = 0.0;
                    for (t, w) in taps.iter().enumerate() {
                        let rr = (r + t as isize - radius).clamp(0, rows - 1);
                        acc += w * tmp[((rr * cols + c) * 3 + ch) as usize];
                    }
                    data[((r * cols + c) * 3 + ch) as usize] = quantize(acc);
                }
            }
        }
        Self { rows: self.rows, cols: self.cols, data, source: self.source.clone() }
    }
}

fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Real-valued single-channel image, row-major. Values from
/// [`to_grayscale`] lie in `[0, 1]`; high-pass outputs may be negative.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayProfile {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl GrayProfile {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} values do not form a {rows}x{cols} profile",
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn to_depth_profile(&self) -> Result<crate::surface::DepthProfile> {
        crate::surface::DepthProfile::new(self.rows, self.cols, self.values.clone())
    }
}

pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Luminosity grayscale scaled to `[0, 1]`.
pub fn to_grayscale(img: &ReflectionImage) -> GrayProfile {
    let values = img
        .data
        .chunks_exact(3)
        .map(|p| {
            (LUMA_WEIGHTS[0] * p[0] as f64 + LUMA_WEIGHTS[1] * p[1] as f64 + LUMA_WEIGHTS[2] * p[2] as f64)
                / 255.0
        })
        .collect();
    GrayProfile { rows: img.rows, cols: img.cols, values }
}

/// Channel-wise bilinear resampling with aligned corners.
pub fn resize_bilinear(img: &ReflectionImage, rows: usize, cols: usize) -> Result<ReflectionImage> {
    if rows < 2 || cols < 2 {
        return Err(Error::invalid(format!("resize target {rows}x{cols} is degenerate")));
    }
    if rows == img.rows && cols == img.cols {
        return Ok(img.clone());
    }
    let scale = |src: usize, dst: usize| {
        if src == 1 {
            0.0
        } else {
            (src - 1) as f64 / (dst - 1) as f64
        }
    };
    let (sy, sx) = (scale(img.rows, rows), scale(img.cols, cols));
    let col_taps: Vec<(usize, usize, f64)> = (0..cols)
        .map(|c| {
            let x = c as f64 * sx;
            let x0 = (x.floor() as usize).min(img.cols - 1);
            let x1 = (x0 + 1).min(img.cols - 1);
            (x0, x1, x - x0 as f64)
        })
        .collect();
    let mut data = Vec::with_capacity(rows * cols * 3);
    for r in 0..rows {
        let y = r as f64 * sy;
        let y0 = (y.floor() as usize).min(img.rows - 1);
        let y1 = (y0 + 1).min(img.rows - 1);
        let fy = y - y0 as f64;
        for &(x0, x1, fx) in &col_taps {
            for ch in 0..3 {
                let at = |rr: usize, cc: usize| img.data[(rr * img.cols + cc) * 3 + ch] as f64;
                let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
                let bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
                data.push(quantize(top * (1.0 - fy) + bottom * fy));
            }
        }
    }
    Ok(ReflectionImage { rows, cols, data, source: img.source.clone() })
}
