use crate::error::{Error, Result};

/// Piecewise-linear interpolant of a sampled BLC over the full ratio range.
///
/// The `K` samples sit at `k/(K+1)`; the end segments `[0, 1/(K+1)]` and
/// `[K/(K+1), 1]` extend the first and last sample segments linearly, so the
/// nodes form a uniform grid of `K + 2` points with spacing `1/(K+1)`.
#[derive(Clone, Debug)]
pub struct RatioCurve {
    ys: Vec<f64>,
    step: f64,
    /// Running integral from 0 up to each node.
    cumulative: Vec<f64>,
}

impl RatioCurve {
    /// Requires at least two samples.
    pub fn new(samples: &[f64]) -> Result<Self> {
        let k = samples.len();
        if k < 2 {
            return Err(Error::invalid(format!("need at least 2 BLC samples, got {k}")));
        }
        let mut ys = Vec::with_capacity(k + 2);
        ys.push(2.0 * samples[0] - samples[1]);
        ys.extend_from_slice(samples);
        ys.push(2.0 * samples[k - 1] - samples[k - 2]);
        let step = 1.0 / (k + 1) as f64;
        let mut cumulative = Vec::with_capacity(ys.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in ys.windows(2) {
            acc += 0.5 * step * (w[0] + w[1]);
            cumulative.push(acc);
        }
        Ok(Self { ys, step, cumulative })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of nodes, including the two extrapolated end points.
    pub fn nodes(&self) -> usize {
        self.ys.len()
    }

    pub fn node_x(&self, i: usize) -> f64 {
        if i + 1 == self.ys.len() {
            1.0
        } else {
            i as f64 * self.step
        }
    }

    pub fn node_y(&self, i: usize) -> f64 {
        self.ys[i]
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let x = x.clamp(0.0, 1.0);
        let last = self.ys.len() - 2;
        let i = ((x / self.step).floor() as usize).min(last);
        (i, x - i as f64 * self.step)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (i, dx) = self.locate(x);
        let t = dx / self.step;
        self.ys[i] + t * (self.ys[i + 1] - self.ys[i])
    }

    fn primitive(&self, x: f64) -> f64 {
        let (i, dx) = self.locate(x);
        self.cumulative[i] + 0.5 * dx * (self.ys[i] + self.eval(x))
    }

    /// Exact integral of the interpolant over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.primitive(b) - self.primitive(a)
    }

    /// Smallest ratio at which the curve has fallen to `level` or below;
    /// 1 when it never does.
    pub fn first_at_or_below(&self, level: f64) -> f64 {
        if self.ys[0] <= level {
            return 0.0;
        }
        match self.ys.iter().position(|&y| y <= level) {
            None => 1.0,
            Some(j) => {
                let (y0, y1) = (self.ys[j - 1], self.ys[j]);
                let frac = (y0 - level) / (y0 - y1);
                (self.node_x(j - 1) + frac * self.step).min(1.0)
            }
        }
    }

    /// Largest ratio at which the curve is still at `level` or above;
    /// 0 when it never is.
    pub fn last_at_or_above(&self, level: f64) -> f64 {
        let n = self.ys.len();
        if self.ys[n - 1] >= level {
            return 1.0;
        }
        match self.ys.iter().rposition(|&y| y >= level) {
            None => 0.0,
            Some(j) => {
                let (y0, y1) = (self.ys[j], self.ys[j + 1]);
                let frac = (y0 - level) / (y0 - y1);
                (self.node_x(j) + frac * self.step).min(1.0)
            }
        }
    }
}
