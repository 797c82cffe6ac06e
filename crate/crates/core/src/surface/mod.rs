//! Depth profiles, bearing load curves and the distances between them.
//!
//! A bearing load curve (BLC) is the reversed empirical quantile function of
//! the heights of a profile, sampled at the `K` material ratios
//! `k / (K + 1)`, `k = 1..=K`. Entry 0 is therefore the highest sampled
//! height and the curve is non-increasing.

mod curve;
pub mod io;
mod params;

pub use curve::RatioCurve;
pub use params::{
    extract_k_params, extract_volume_params, CoreWindow, KParams, VolumeParams, MIN_PARAM_SAMPLES,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Matrix of surface heights in µm, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthProfile {
    rows: usize,
    cols: usize,
    heights: Vec<f64>,
    /// µm per pixel. Carried along, never used in computations.
    pub pixel_pitch: f64,
}

impl DepthProfile {
    pub fn new(rows: usize, cols: usize, heights: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("depth profile must have at least one row and column"));
        }
        if heights.len() != rows * cols {
            return Err(Error::invalid(format!(
                "depth profile of {rows}x{cols} needs {} heights, got {}",
                rows * cols,
                heights.len()
            )));
        }
        if let Some(i) = heights.iter().position(|h| !h.is_finite()) {
            return Err(Error::invalid(format!("non-finite height at index {i}")));
        }
        Ok(Self { rows, cols, heights, pixel_pitch: 1.0 })
    }

    /// Build from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged rows in depth profile"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn with_pixel_pitch(mut self, pitch: f64) -> Self {
        self.pixel_pitch = pitch;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.heights[r * self.cols + c]
    }

    pub fn mean(&self) -> f64 {
        self.heights.iter().sum::<f64>() / self.heights.len() as f64
    }
}

/// A discretized bearing load curve: non-increasing, finite, `K >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Blc {
    values: Vec<f64>,
}

impl Blc {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("a BLC needs at least one sample"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite BLC value at index {i}")));
        }
        if let Some(i) = values.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::invalid(format!(
                "BLC must be non-increasing, but value {} at index {} is followed by {}",
                values[i],
                i,
                values[i + 1]
            )));
        }
        Ok(Self { values })
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Material ratio of sample `index` (0-based).
    pub fn ratio_at(&self, index: usize) -> f64 {
        (index + 1) as f64 / (self.k() + 1) as f64
    }

    /// Elementwise affine map `scale * b + shift`; `scale` must be non-negative.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| scale * v + shift).collect())
    }

    pub fn k_params(&self) -> Result<KParams> {
        extract_k_params(&self.values, CoreWindow::FullSweep)
    }

    pub fn volume_params(&self) -> Result<VolumeParams> {
        extract_volume_params(&self.values)
    }
}

impl TryFrom<Vec<f64>> for Blc {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Blc::new(v)
    }
}

impl From<Blc> for Vec<f64> {
    fn from(b: Blc) -> Self {
        b.values
    }
}

/// Sampled reversed empirical quantile function of `profile.heights()`.
pub fn compute_blc(profile: &DepthProfile, k: usize) -> Result<Blc> {
    blc_of_values(profile.heights(), k)
}

/// Same as [`compute_blc`] for a bare slice of values.
///
/// At ratio `x = k/(K+1)` the result is the smallest observed value `y` with
/// `#{a <= y} >= (1 - x) N`. The rank is computed in integers so the
/// selected pixel never depends on floating-point rounding of `x`.
pub fn blc_of_values(values: &[f64], k: usize) -> Result<Blc> {
    if values.is_empty() {
        return Err(Error::invalid("cannot compute a BLC of an empty profile"));
    }
    if k == 0 {
        return Err(Error::invalid("BLC sample count K must be positive"));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite height at index {i}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as u64;
    let kk = k as u64;
    let out = (1..=kk)
        .map(|j| {
            // ceil((K + 1 - j) * N / (K + 1)), always in 1..=N
            let num = (kk + 1 - j) * n;
            let rank = num.div_ceil(kk + 1);
            sorted[(rank - 1) as usize]
        })
        .collect();
    Ok(Blc { values: out })
}

/// Wasserstein-1 distance of two discretized quantile functions: the
/// component-wise mean absolute difference.
pub fn wasserstein1(a: &Blc, b: &Blc) -> Result<f64> {
    mean_abs_diff(a.values(), b.values())
}

pub(crate) fn mean_abs_diff(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "curves have different sample counts ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::invalid("empty curves"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// BLC heights at material ratios 0.25, 0.5 and 0.75.
pub fn blc_area_quartiles(b: &Blc) -> Result<(f64, f64, f64)> {
    let curve = RatioCurve::new(b.values())?;
    Ok((curve.eval(0.25), curve.eval(0.5), curve.eval(0.75)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(rows: &[&[f64]]) -> DepthProfile {
        DepthProfile::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn constant_profile_gives_constant_curve() {
        let p = profile(&[&[5.0, 5.0], &[5.0, 5.0]]);
        assert_eq!(compute_blc(&p, 4).unwrap().values(), &[5.0, 5.0, 5.0, 5.0]);
    }

    #[test]
    fn small_profile_quantiles() {
        let p = profile(&[&[0.0, 1.0], &[2.0, 3.0]]);
        assert_eq!(compute_blc(&p, 3).unwrap().values(), &[2.0, 1.0, 0.0]);
        let shifted = profile(&[&[10.0, 11.0], &[12.0, 13.0]]);
        assert_eq!(compute_blc(&shifted, 3).unwrap().values(), &[12.0, 11.0, 10.0]);
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(matches!(DepthProfile::new(0, 3, vec![]), Err(Error::InvalidInput(_))));
        assert!(matches!(
            DepthProfile::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::InvalidInput(_))
        ));
        assert!(blc_of_values(&[], 3).is_err());
        assert!(blc_of_values(&[1.0], 0).is_err());
        assert!(blc_of_values(&[1.0, f64::INFINITY], 2).is_err());
    }

    #[test]
    fn blc_rejects_increasing_values() {
        assert!(Blc::new(vec![1.0, 2.0]).is_err());
        assert!(Blc::new(vec![]).is_err());
        assert!(Blc::new(vec![2.0, 2.0, 1.0]).is_ok());
    }

    #[test]
    fn wasserstein_examples() {
        let b = |v: &[f64]| Blc::new(v.to_vec()).unwrap();
        assert_eq!(wasserstein1(&b(&[1.0, 1.0]), &b(&[1.0, 1.0])).unwrap(), 0.0);
        assert_eq!(wasserstein1(&b(&[2.0, 0.0]), &b(&[0.0, 0.0])).unwrap(), 1.0);
        let d = wasserstein1(&b(&[2.0, 1.0, 0.0]), &b(&[1.0, 1.0, 1.0])).unwrap();
        assert!((d - 2.0 / 3.0).abs() < 1e-15);
        assert!(wasserstein1(&b(&[1.0]), &b(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn quartiles() {
        let b = Blc::new(vec![3.0, 2.0, 1.0, 0.0]).unwrap();
        let (q25, q50, q75) = blc_area_quartiles(&b).unwrap();
        assert!((q25 - 2.75).abs() < 1e-12);
        assert!((q50 - 1.5).abs() < 1e-12);
        assert!((q75 - 0.25).abs() < 1e-12);

        let c = Blc::new(vec![0.7; 9]).unwrap();
        assert_eq!(blc_area_quartiles(&c).unwrap(), (0.7, 0.7, 0.7));

        let k = 512;
        let line = Blc::new((1..=k).map(|i| 1.0 - 2.0 * i as f64 / (k + 1) as f64).collect()).unwrap();
        let (q25, q50, q75) = blc_area_quartiles(&line).unwrap();
        let tol = 2.0 / k as f64;
        assert!((q25 - 0.5).abs() < tol && q50.abs() < tol && (q75 + 0.5).abs() < tol);

        assert!(blc_area_quartiles(&Blc::new(vec![1.0]).unwrap()).is_err());
    }
}
