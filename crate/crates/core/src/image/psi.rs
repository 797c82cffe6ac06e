use serde::{Deserialize, Serialize};

use super::fourier::{check_filter_input, filter_spectrum, spectrum, unshifted_mask, Fft2d};
use super::{resize_bilinear, to_grayscale, GrayProfile, ReflectionImage};
use crate::error::{Error, Result};
use crate::surface::{blc_of_values, Blc};

/// Cut-off distances of the four high-pass filters, in stack column order.
pub const PSI_SIGMAS: [f64; 4] = [8.0, 16.0, 32.0, 64.0];

/// BLCs of the high-pass filtered grayscale image, one column per cut-off.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilteredBlcStack {
    pub sigmas: Vec<f64>,
    pub columns: Vec<Blc>,
}

impl FilteredBlcStack {
    pub fn new(sigmas: Vec<f64>, columns: Vec<Blc>) -> Result<Self> {
        if sigmas.len() != columns.len() || columns.is_empty() {
            return Err(Error::invalid("stack needs one column per sigma"));
        }
        let k = columns[0].k();
        if columns.iter().any(|c| c.k() != k) {
            return Err(Error::invalid("stack columns have different lengths"));
        }
        Ok(Self { sigmas, columns })
    }

    pub fn k(&self) -> usize {
        self.columns[0].k()
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, i: usize) -> &Blc {
        &self.columns[i]
    }

    /// Row `k` across all columns.
    pub fn row(&self, k: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c.values()[k]).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// BLC sample count.
    pub k: usize,
    pub sigmas: Vec<f64>,
    /// Resize the RGB image to `[rows, cols]` before filtering.
    pub resize: Option<[usize; 2]>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { k: 512, sigmas: PSI_SIGMAS.to_vec(), resize: Some([512, 512]) }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < crate::surface::MIN_PARAM_SAMPLES {
            return Err(Error::config(format!("K must be at least 10, got {}", self.k)));
        }
        if self.sigmas.is_empty() || self.sigmas.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::config("sigmas must be non-empty and positive"));
        }
        if let Some([r, c]) = self.resize {
            if r < 2 || c < 2 {
                return Err(Error::config(format!("resize target {r}x{c} is degenerate")));
            }
        }
        Ok(())
    }
}

struct FilterBank {
    fft: Fft2d,
    masks: Vec<Vec<f64>>,
}

impl FilterBank {
    fn new(rows: usize, cols: usize, sigmas: &[f64]) -> Self {
        Self {
            fft: Fft2d::new(rows, cols),
            masks: sigmas.iter().map(|&s| unshifted_mask(rows, cols, s)).collect(),
        }
    }
}

/// Resize, grayscale, filter bank and BLC extraction with cached FFT plans.
pub struct Preprocessor {
    config: PreprocessConfig,
    bank: Option<FilterBank>,
}

impl Preprocessor {
    pub fn new(config: PreprocessConfig) -> Result<Self> {
        config.validate()?;
        let bank = config.resize.map(|[r, c]| FilterBank::new(r, c, &config.sigmas));
        Ok(Self { config, bank })
    }

    pub fn config(&self) -> &PreprocessConfig {
        &self.config
    }

    fn prepared(&self, img: &ReflectionImage) -> Result<ReflectionImage> {
        match self.config.resize {
            Some([r, c]) => resize_bilinear(img, r, c),
            None => Ok(img.clone()),
        }
    }

    /// The filtered grayscale profiles, one per sigma.
    pub fn filtered_profiles(&self, img: &ReflectionImage) -> Result<Vec<GrayProfile>> {
        let img = self.prepared(img)?;
        let gray = to_grayscale(&img);
        self.filter_gray(&gray)
    }

    pub fn filter_gray(&self, gray: &GrayProfile) -> Result<Vec<GrayProfile>> {
        for &s in &self.config.sigmas {
            check_filter_input(gray, s)?;
        }
        let (rows, cols) = (gray.rows(), gray.cols());
        let local;
        let bank = match &self.bank {
            Some(b) if b.fft.dims() == (rows, cols) => b,
            _ => {
                local = FilterBank::new(rows, cols, &self.config.sigmas);
                &local
            }
        };
        let freq = spectrum(&bank.fft, gray);
        bank.masks
            .iter()
            .map(|m| GrayProfile::new(rows, cols, filter_spectrum(&bank.fft, &freq, m)))
            .collect()
    }

    pub fn stack(&self, img: &ReflectionImage) -> Result<FilteredBlcStack> {
        let profiles = self.filtered_profiles(img)?;
        let columns = profiles
            .iter()
            .map(|p| blc_of_values(p.values(), self.config.k))
            .collect::<Result<Vec<_>>>()?;
        FilteredBlcStack::new(self.config.sigmas.clone(), columns)
    }

    /// Stacks for many images, in input order.
    pub fn stacks(&self, images: &[ReflectionImage]) -> Result<Vec<FilteredBlcStack>> {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            images.par_iter().map(|img| self.stack(img)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            images.iter().map(|img| self.stack(img)).collect()
        }
    }
}

/// The K×4 stack for an image at its own size (no resize).
pub fn psi_transform(img: &ReflectionImage, k: usize) -> Result<FilteredBlcStack> {
    Preprocessor::new(PreprocessConfig { k, resize: None, ..Default::default() })?.stack(img)
}
