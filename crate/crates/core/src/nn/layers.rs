//! Dense and same-padded 1D convolution layers with exact gradients.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{gemm, View};
use crate::error::{Error, Result};

/// Multi-channel 1D signal stored channel-major: `data[c * len + p]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    pub channels: usize,
    pub len: usize,
    pub data: Vec<f64>,
}

impl Signal {
    pub fn zeros(channels: usize, len: usize) -> Self {
        Self { channels, len, data: vec![0.0; channels * len] }
    }

    pub fn new(channels: usize, len: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * len {
            return Err(Error::invalid(format!(
                "signal of {channels} channels x {len} samples needs {} values, got {}",
                channels * len,
                data.len()
            )));
        }
        Ok(Self { channels, len, data })
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * self.len..(c + 1) * self.len]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.len..(c + 1) * self.len]
    }
}

fn glorot_uniform(rng: &mut impl Rng, fan_in: usize, fan_out: usize, out: &mut [f64]) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for w in out {
        *w = rng.random_range(-limit..=limit);
    }
}

/// Shape of a dense layer, as recorded in bundle headers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseShape {
    pub inputs: usize,
    pub outputs: usize,
}

impl DenseShape {
    pub fn param_count(&self) -> usize {
        self.inputs * self.outputs + self.outputs
    }
}

/// Fully connected layer: `y = W x + b`, `W` stored `outputs × inputs`.
#[derive(Clone, Debug)]
pub struct Dense {
    pub shape: DenseShape,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub grad_weights: Vec<f64>,
    pub grad_bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            shape: DenseShape { inputs, outputs },
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            grad_weights: vec![0.0; inputs * outputs],
            grad_bias: vec![0.0; outputs],
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let mut layer = Self::zeros(inputs, outputs);
        glorot_uniform(rng, inputs, outputs, &mut layer.weights);
        layer
    }

    pub fn param_count(&self) -> usize {
        self.shape.param_count()
    }

    /// Row-major `batch × inputs` in, `batch × outputs` out.
    pub fn forward(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let DenseShape { inputs, outputs } = self.shape;
        assert_eq!(x.len(), batch * inputs);
        let mut y: Vec<f64> = (0..batch).flat_map(|_| self.bias.iter().copied()).collect();
        // Y = X Wᵀ + 1 bᵀ
        gemm(batch, inputs, outputs, 1.0, View::new(x, inputs, 1), View::new(&self.weights, 1, inputs), 1.0, &mut y, outputs, 1);
        y
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, x: &[f64], grad_y: &[f64], batch: usize) -> Vec<f64> {
        let DenseShape { inputs, outputs } = self.shape;
        assert_eq!(grad_y.len(), batch * outputs);
        // dW += dYᵀ X
        gemm(outputs, batch, inputs, 1.0, View::new(grad_y, 1, outputs), View::new(x, inputs, 1), 1.0, &mut self.grad_weights, inputs, 1);
        for row in grad_y.chunks_exact(outputs) {
            for (g, d) in self.grad_bias.iter_mut().zip(row) {
                *g += d;
            }
        }
        // dX = dY W
        let mut grad_x = vec![0.0; batch * inputs];
        gemm(batch, outputs, inputs, 1.0, View::new(grad_y, outputs, 1), View::new(&self.weights, inputs, 1), 0.0, &mut grad_x, inputs, 1);
        grad_x
    }

    pub fn tensors(&mut self) -> [(&mut [f64], &mut [f64]); 2] {
        [(&mut self.weights, &mut self.grad_weights), (&mut self.bias, &mut self.grad_bias)]
    }
}

/// Single-vector `W x + b` with shape checking.
pub fn dense_apply(layer: &Dense, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != layer.shape.inputs {
        return Err(Error::invalid(format!(
            "dense layer expects {} inputs, got {}",
            layer.shape.inputs,
            x.len()
        )));
    }
    Ok(layer.forward(x, 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvShape {
    pub inputs: usize,
    pub outputs: usize,
    pub kernel: usize,
}

impl ConvShape {
    pub fn param_count(&self) -> usize {
        self.inputs * self.kernel * self.outputs + self.outputs
    }
}

/// Cross-correlation with zero same-padding; kernels stored `out × in × k`.
#[derive(Clone, Debug)]
pub struct Conv1d {
    pub shape: ConvShape,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub grad_weights: Vec<f64>,
    pub grad_bias: Vec<f64>,
}

impl Conv1d {
    pub fn zeros(inputs: usize, outputs: usize, kernel: usize) -> Result<Self> {
        if kernel % 2 == 0 {
            return Err(Error::config(format!("kernel size must be odd, got {kernel}")));
        }
        let n = inputs * outputs * kernel;
        Ok(Self {
            shape: ConvShape { inputs, outputs, kernel },
            weights: vec![0.0; n],
            bias: vec![0.0; outputs],
            grad_weights: vec![0.0; n],
            grad_bias: vec![0.0; outputs],
        })
    }

    pub fn init(inputs: usize, outputs: usize, kernel: usize, rng: &mut impl Rng) -> Result<Self> {
        let mut layer = Self::zeros(inputs, outputs, kernel)?;
        glorot_uniform(rng, inputs * kernel, outputs * kernel, &mut layer.weights);
        Ok(layer)
    }

    pub fn param_count(&self) -> usize {
        self.shape.param_count()
    }

    /// For tap `t`, the offset into the input and the valid output range.
    fn tap_range(&self, t: usize, len: usize) -> (isize, usize, usize) {
        let pad = (self.shape.kernel / 2) as isize;
        let d = t as isize - pad;
        let lo = (-d).max(0) as usize;
        let hi = (len as isize - d).min(len as isize).max(0) as usize;
        (d, lo, hi)
    }

    pub fn forward(&self, x: &Signal) -> Signal {
        let ConvShape { inputs, outputs, kernel } = self.shape;
        assert_eq!(x.channels, inputs);
        let len = x.len;
        let mut y = Signal::zeros(outputs, len);
        for (o, b) in self.bias.iter().enumerate() {
            y.channel_mut(o).fill(*b);
        }
        for t in 0..kernel {
            let (d, lo, hi) = self.tap_range(t, len);
            if hi <= lo {
                continue;
            }
            let src = (lo as isize + d) as usize;
            gemm(
                outputs,
                inputs,
                hi - lo,
                1.0,
                View::new(&self.weights[t..], inputs * kernel, kernel),
                View::new(&x.data[src..], len, 1),
                1.0,
                &mut y.data[lo..],
                len,
                1,
            );
        }
        y
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, x: &Signal, grad_y: &Signal) -> Signal {
        let ConvShape { inputs, outputs, kernel } = self.shape;
        let len = x.len;
        assert_eq!((grad_y.channels, grad_y.len), (outputs, len));
        for (o, g) in self.grad_bias.iter_mut().enumerate() {
            *g += grad_y.channel(o).iter().sum::<f64>();
        }
        let mut grad_x = Signal::zeros(inputs, len);
        for t in 0..kernel {
            let (d, lo, hi) = self.tap_range(t, len);
            if hi <= lo {
                continue;
            }
            let n = hi - lo;
            let src = (lo as isize + d) as usize;
            gemm(
                outputs,
                n,
                inputs,
                1.0,
                View::new(&grad_y.data[lo..], len, 1),
                View::new(&x.data[src..], 1, len),
                1.0,
                &mut self.grad_weights[t..],
                inputs * kernel,
                kernel,
            );
            gemm(
                inputs,
                outputs,
                n,
                1.0,
                View::new(&self.weights[t..], kernel, inputs * kernel),
                View::new(&grad_y.data[lo..], len, 1),
                1.0,
                &mut grad_x.data[src..],
                len,
                1,
            );
        }
        grad_x
    }

    pub fn tensors(&mut self) -> [(&mut [f64], &mut [f64]); 2] {
        [(&mut self.weights, &mut self.grad_weights), (&mut self.bias, &mut self.grad_bias)]
    }
}

/// `K × in` signal through the layer, with shape checking.
pub fn conv1d_apply(layer: &Conv1d, x: &Signal) -> Result<Signal> {
    if x.channels != layer.shape.inputs {
        return Err(Error::invalid(format!(
            "conv layer expects {} channels, got {}",
            layer.shape.inputs, x.channels
        )));
    }
    Ok(layer.forward(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_dense() {
        let mut l = Dense::zeros(2, 2);
        l.weights = vec![1.0, 0.0, 0.0, 1.0];
        assert_eq!(dense_apply(&l, &[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        assert!(dense_apply(&l, &[1.0]).is_err());
    }

    #[test]
    fn dense_counts() {
        assert_eq!(Dense::zeros(12, 64).param_count(), 832);
        assert_eq!(Dense::zeros(128, 256).param_count(), 33024);
    }

    #[test]
    fn conv_identity_kernel() {
        let mut l = Conv1d::zeros(1, 1, 3).unwrap();
        l.weights = vec![0.0, 1.0, 0.0];
        let x = Signal::new(1, 6, vec![3.0, -1.0, 4.0, 1.0, -5.0, 9.0]).unwrap();
        assert_eq!(conv1d_apply(&l, &x).unwrap(), x);
    }

    #[test]
    fn conv_counts_and_config() {
        assert_eq!(Conv1d::zeros(7, 64, 5).unwrap().param_count(), 2304);
        assert_eq!(Conv1d::zeros(512, 1, 5).unwrap().param_count(), 2561);
        assert!(matches!(Conv1d::zeros(3, 3, 4), Err(Error::Config(_))));
    }

    #[test]
    fn conv_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kernel in [1, 3, 5, 7] {
            let mut l = Conv1d::init(3, 2, kernel, &mut rng).unwrap();
            l.bias = vec![0.5, -0.25];
            let len = 9;
            let x = Signal::new(3, len, (0..3 * len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let y = l.forward(&x);
            assert_eq!(y.len, len);
            let pad = kernel as isize / 2;
            for o in 0..2 {
                for p in 0..len {
                    let mut want = l.bias[o];
                    for i in 0..3 {
                        for t in 0..kernel {
                            let q = p as isize + t as isize - pad;
                            if (0..len as isize).contains(&q) {
                                want += l.weights[(o * 3 + i) * kernel + t] * x.data[i * len + q as usize];
                            }
                        }
                    }
                    assert!((y.data[o * len + p] - want).abs() < 1e-12);
                }
            }
        }
    }
}
