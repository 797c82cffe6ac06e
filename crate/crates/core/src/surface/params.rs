//! Functional (Sk family) and volume roughness parameters of a BLC.

use serde::{Deserialize, Serialize};

use super::curve::RatioCurve;
use crate::error::{Error, Result};

/// Width of the equivalent-line window on the material-ratio axis.
const CORE_WINDOW_WIDTH: f64 = 0.4;
/// Minimum sample count for parameter extraction.
pub const MIN_PARAM_SAMPLES: usize = 10;
const PEAK_RATIO: f64 = 0.10;
const VALLEY_RATIO: f64 = 0.80;
const NODE_EPS: f64 = 1e-12;

/// Where the 40 % equivalent-line window may start.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoreWindow {
    /// Start anywhere in `[0, 0.6]`.
    #[default]
    FullSweep,
    /// Start in `[0.2, 0.3]`, keeping the window inside the 20 %..70 % core.
    CoreRegion,
}

impl CoreWindow {
    fn start_range(self) -> (f64, f64) {
        match self {
            CoreWindow::FullSweep => (0.0, 1.0 - CORE_WINDOW_WIDTH),
            CoreWindow::CoreRegion => (0.2, 0.3),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KParams {
    /// Core roughness depth, µm.
    pub sk: f64,
    /// Reduced peak height, µm.
    pub spk: f64,
    /// Reduced valley depth, µm.
    pub svk: f64,
    /// Upper material ratio of the core, in `[0, 1]`.
    pub smr1: f64,
    /// Lower material ratio of the core, in `[0, 1]`.
    pub smr2: f64,
}

/// Volume parameters in ml/m² (numerically equal to µm for heights in µm).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeParams {
    pub vmp: f64,
    pub vvv: f64,
    pub vmc: f64,
    pub vvc: f64,
}

fn checked_curve(values: &[f64]) -> Result<RatioCurve> {
    if values.len() < MIN_PARAM_SAMPLES {
        return Err(Error::invalid(format!(
            "parameter extraction needs K >= {MIN_PARAM_SAMPLES}, got {}",
            values.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite curve value at index {i}")));
    }
    if let Some(i) = values.windows(2).position(|w| w[0] < w[1]) {
        return Err(Error::invalid(format!("curve is not non-increasing at index {i}")));
    }
    RatioCurve::new(values)
}

/// Sk, Spk, Svk, SMr1 and SMr2 from the equivalent straight line through the
/// flattest 40 % secant of the curve.
pub fn extract_k_params(values: &[f64], window: CoreWindow) -> Result<KParams> {
    let curve = checked_curve(values)?;
    if values[0] == values[values.len() - 1] {
        return Ok(KParams { sk: 0.0, spk: 0.0, svk: 0.0, smr1: 0.0, smr2: 1.0 });
    }
    let (lo, hi) = window.start_range();

    // (start ratio, secant slope) of the flattest window; first one wins ties
    let mut best: Option<(f64, f64, f64)> = None;
    for i in 0..curve.nodes() {
        let x0 = curve.node_x(i);
        if x0 < lo - NODE_EPS {
            continue;
        }
        if x0 > hi + NODE_EPS {
            break;
        }
        let y0 = curve.node_y(i);
        let slope = (curve.eval(x0 + CORE_WINDOW_WIDTH) - y0) / CORE_WINDOW_WIDTH;
        if best.is_none_or(|(_, _, s)| slope.abs() < s.abs()) {
            best = Some((x0, y0, slope));
        }
    }
    let (x0, y0, slope) = best.ok_or_else(|| Error::invalid("no admissible core window"))?;

    let top = y0 - slope * x0;
    let bottom = top + slope;
    let sk = (top - bottom).max(0.0);

    let smr1 = curve.first_at_or_below(top);
    let smr2 = curve.last_at_or_above(bottom).max(smr1);

    let spk = if smr1 > 0.0 {
        let area = curve.integral(0.0, smr1) - top * smr1;
        (2.0 * area / smr1).max(0.0)
    } else {
        0.0
    };
    let svk = if smr2 < 1.0 {
        let area = bottom * (1.0 - smr2) - curve.integral(smr2, 1.0);
        (2.0 * area / (1.0 - smr2)).max(0.0)
    } else {
        0.0
    };
    Ok(KParams { sk, spk, svk, smr1, smr2 })
}

/// Material volume above the level `B(p)` over ratios `[0, p]`.
fn material_volume(curve: &RatioCurve, p: f64) -> f64 {
    curve.integral(0.0, p) - p * curve.eval(p)
}

/// Void volume below the level `B(p)` over ratios `[p, 1]`.
fn void_volume(curve: &RatioCurve, p: f64) -> f64 {
    (1.0 - p) * curve.eval(p) - curve.integral(p, 1.0)
}

pub fn extract_volume_params(values: &[f64]) -> Result<VolumeParams> {
    let curve = checked_curve(values)?;
    if values[0] == values[values.len() - 1] {
        return Ok(VolumeParams { vmp: 0.0, vvv: 0.0, vmc: 0.0, vvc: 0.0 });
    }
    let vm_peak = material_volume(&curve, PEAK_RATIO);
    let vm_valley = material_volume(&curve, VALLEY_RATIO);
    let vv_peak = void_volume(&curve, PEAK_RATIO);
    let vv_valley = void_volume(&curve, VALLEY_RATIO);
    Ok(VolumeParams {
        vmp: vm_peak.max(0.0),
        vvv: vv_valley.max(0.0),
        vmc: (vm_valley - vm_peak).max(0.0),
        vvc: (vv_peak - vv_valley).max(0.0),
    })
}
