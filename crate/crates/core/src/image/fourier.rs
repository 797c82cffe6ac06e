//! Gaussian high-pass filtering in the 2D Fourier domain.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::GrayProfile;
use crate::error::{Error, Result};

/// Planned forward and inverse 2D transforms for one image size.
pub struct Fft2d {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2d({}x{})", self.rows, self.cols)
    }
}

impl Fft2d {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn transform(&self, data: &mut [Complex64], row: &dyn Fft<f64>, col: &dyn Fft<f64>) {
        assert_eq!(data.len(), self.rows * self.cols);
        row.process(data);
        let mut column = vec![Complex64::default(); self.rows];
        for c in 0..self.cols {
            for (r, v) in column.iter_mut().enumerate() {
                *v = data[r * self.cols + c];
            }
            col.process(&mut column);
            for (r, v) in column.iter().enumerate() {
                data[r * self.cols + c] = *v;
            }
        }
    }

    /// Unnormalized forward DFT, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, self.row_fwd.as_ref(), self.col_fwd.as_ref());
    }

    /// Inverse DFT including the `1/(rows*cols)` factor, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, self.row_inv.as_ref(), self.col_inv.as_ref());
        let scale = 1.0 / (self.rows * self.cols) as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

/// 0-based position of the zero frequency in the centered spectrum: the
/// 1-based index `floor(d/2)`.
fn dc_position(d: usize) -> usize {
    d / 2 - 1
}

fn mask_value(i: usize, j: usize, rows: usize, cols: usize, sigma: f64) -> f64 {
    // i, j are 1-based as in the filter definition
    let di = i as f64 - rows as f64 / 2.0;
    let dj = j as f64 - cols as f64 / 2.0;
    1.0 - (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp()
}

/// `H[i, j] = 1 - exp(-((i - rows/2)^2 + (j - cols/2)^2) / (2 sigma^2))` for
/// 1-based `i, j`, stored row-major at `(i - 1, j - 1)` in the centered layout.
pub fn highpass_mask(rows: usize, cols: usize, sigma: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows * cols);
    for i in 1..=rows {
        for j in 1..=cols {
            out.push(mask_value(i, j, rows, cols, sigma));
        }
    }
    out
}

/// The same mask rearranged to the unshifted DFT layout, so multiplying the
/// raw spectrum equals shift, multiply, inverse shift.
pub(crate) fn unshifted_mask(rows: usize, cols: usize, sigma: f64) -> Vec<f64> {
    let (cr, cc) = (dc_position(rows), dc_position(cols));
    let mut out = Vec::with_capacity(rows * cols);
    for u in 0..rows {
        let i = (u + cr) % rows + 1;
        for v in 0..cols {
            let j = (v + cc) % cols + 1;
            out.push(mask_value(i, j, rows, cols, sigma));
        }
    }
    out
}

pub(crate) fn check_filter_input(gray: &GrayProfile, sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("cut-off sigma must be positive, got {sigma}")));
    }
    if gray.rows() < 2 || gray.cols() < 2 {
        return Err(Error::invalid("high-pass filtering needs at least 2x2 pixels"));
    }
    if let Some(i) = gray.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite gray value at index {i}")));
    }
    Ok(())
}

pub(crate) fn spectrum(fft: &Fft2d, gray: &GrayProfile) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = gray.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut data);
    data
}

pub(crate) fn filter_spectrum(fft: &Fft2d, spectrum: &[Complex64], mask: &[f64]) -> Vec<f64> {
    let mut data: Vec<Complex64> = spectrum.iter().zip(mask).map(|(s, m)| s * m).collect();
    fft.inverse(&mut data);
    data.into_iter().map(|c| c.re).collect()
}

/// Gaussian high-pass filter of a gray profile with cut-off distance `sigma`.
pub fn highpass_filter(gray: &GrayProfile, sigma: f64) -> Result<GrayProfile> {
    check_filter_input(gray, sigma)?;
    let fft = Fft2d::new(gray.rows(), gray.cols());
    let freq = spectrum(&fft, gray);
    let mask = unshifted_mask(gray.rows(), gray.cols(), sigma);
    GrayProfile::new(gray.rows(), gray.cols(), filter_spectrum(&fft, &freq, &mask))
}
