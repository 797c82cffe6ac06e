//! The two fixed architectures: a dense parameter regressor and a 1D CNN.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::activation::Activation;
use super::layers::{Conv1d, Dense, Signal};
use super::norm::{instance_norm_backward, instance_norm_forward, NormCache};
use super::optim::Parameterized;
use crate::error::{Error, Result};

pub const PARAM_WIDTHS: [usize; 6] = [12, 64, 128, 256, 256, 3];
pub const BLC_CHANNELS: [usize; 10] = [7, 64, 64, 128, 128, 256, 256, 512, 512, 1];
pub const BLC_KERNEL: usize = 5;

struct DenseTape {
    batch: usize,
    /// Input of every layer.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation output of every layer.
    pre: Vec<Vec<f64>>,
}

/// Fully connected network with leaky ReLU hidden layers and a linear output.
pub struct ParamNet {
    pub layers: Vec<Dense>,
    tape: Option<DenseTape>,
}

impl ParamNet {
    pub fn from_widths(widths: &[usize], seed: Option<u64>) -> Self {
        let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
        let layers = widths
            .windows(2)
            .map(|w| match rng.as_mut() {
                Some(r) => Dense::init(w[0], w[1], r),
                None => Dense::zeros(w[0], w[1]),
            })
            .collect();
        Self { layers, tape: None }
    }

    /// The standard 12→64→128→256→256→3 network with seeded Glorot weights.
    pub fn new(seed: u64) -> Self {
        Self::from_widths(&PARAM_WIDTHS, Some(seed))
    }

    /// Same architecture with all parameters zero.
    pub fn zeros() -> Self {
        Self::from_widths(&PARAM_WIDTHS, None)
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].shape.inputs
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.shape.outputs)
    }

    pub fn layer_param_counts(&self) -> Vec<usize> {
        self.layers.iter().map(Dense::param_count).collect()
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            Activation::Linear
        } else {
            Activation::LeakyRelu
        }
    }

    fn run(&self, x: &[f64], batch: usize, mut tape: Option<&mut DenseTape>) -> Result<Vec<f64>> {
        if x.len() != batch * self.inputs() {
            return Err(Error::invalid(format!(
                "expected {batch} x {} inputs, got {} values",
                self.inputs(),
                x.len()
            )));
        }
        let mut h = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&h, batch);
            let act = self.activation(i);
            let next = act.forward(&z);
            if let Some(t) = tape.as_deref_mut() {
                t.inputs.push(std::mem::replace(&mut h, next));
                t.pre.push(z);
            } else {
                h = next;
            }
        }
        Ok(h)
    }

    /// Inference on a row-major `batch × inputs` matrix; records nothing.
    pub fn predict(&self, x: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.run(x, batch, None)
    }

    /// Forward pass that records what [`ParamNet::backward`] needs.
    pub fn forward(&mut self, x: &[f64], batch: usize) -> Result<Vec<f64>> {
        let mut tape = DenseTape { batch, inputs: Vec::new(), pre: Vec::new() };
        let y = self.run(x, batch, Some(&mut tape))?;
        self.tape = Some(tape);
        Ok(y)
    }

    /// Accumulates parameter gradients for the last forward pass and returns
    /// the gradient with respect to its input.
    pub fn backward(&mut self, grad_out: &[f64]) -> Result<Vec<f64>> {
        let tape = self.tape.take().ok_or_else(|| Error::State("backward called without a forward pass".into()))?;
        if grad_out.len() != tape.batch * self.outputs() {
            return Err(Error::invalid("upstream gradient has the wrong size"));
        }
        let mut g = grad_out.to_vec();
        for i in (0..self.layers.len()).rev() {
            g = self.activation(i).backward(&tape.pre[i], &g);
            g = self.layers[i].backward(&tape.inputs[i], &g, tape.batch);
        }
        Ok(g)
    }
}

impl Parameterized for ParamNet {
    fn tensors(&mut self) -> Vec<(&mut [f64], &mut [f64])> {
        self.layers.iter_mut().flat_map(|l| l.tensors()).collect()
    }
}

struct ConvTape {
    /// Input of every conv layer.
    inputs: Vec<Signal>,
    /// Instance norm cache of every hidden layer.
    norms: Vec<NormCache>,
    /// Where the ReLU of every hidden layer was active.
    active: Vec<Vec<bool>>,
}

/// Same-padded CNN: every hidden conv is followed by instance norm and ReLU,
/// the last conv is linear.
pub struct BlcNet {
    pub convs: Vec<Conv1d>,
    tape: Option<ConvTape>,
}

impl BlcNet {
    pub fn from_channels(channels: &[usize], kernel: usize, seed: Option<u64>) -> Result<Self> {
        let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
        let convs = channels
            .windows(2)
            .map(|w| match rng.as_mut() {
                Some(r) => Conv1d::init(w[0], w[1], kernel, r),
                None => Conv1d::zeros(w[0], w[1], kernel),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { convs, tape: None })
    }

    /// The standard 9-layer network with seeded Glorot weights.
    pub fn new(seed: u64) -> Self {
        Self::from_channels(&BLC_CHANNELS, BLC_KERNEL, Some(seed)).expect("odd kernel")
    }

    pub fn zeros() -> Self {
        Self::from_channels(&BLC_CHANNELS, BLC_KERNEL, None).expect("odd kernel")
    }

    pub fn input_channels(&self) -> usize {
        self.convs[0].shape.inputs
    }

    pub fn layer_param_counts(&self) -> Vec<usize> {
        self.convs.iter().map(Conv1d::param_count).collect()
    }

    fn run(&self, x: &Signal, mut tape: Option<&mut ConvTape>) -> Result<Vec<f64>> {
        if x.channels != self.input_channels() {
            return Err(Error::invalid(format!(
                "network expects {} channels, got {}",
                self.input_channels(),
                x.channels
            )));
        }
        if x.len < 2 {
            return Err(Error::invalid("signal needs at least 2 positions"));
        }
        let last = self.convs.len() - 1;
        let mut h = x.clone();
        for (i, conv) in self.convs.iter().enumerate() {
            let z = conv.forward(&h);
            if i == last {
                if let Some(t) = tape.as_deref_mut() {
                    t.inputs.push(h);
                }
                return Ok(z.data);
            }
            let cache = instance_norm_forward(&z)?;
            let mut next = cache.output.clone();
            let active: Vec<bool> = next.data.iter().map(|&v| v > 0.0).collect();
            next.data.iter_mut().for_each(|v| *v = v.max(0.0));
            if let Some(t) = tape.as_deref_mut() {
                t.inputs.push(std::mem::replace(&mut h, next));
                t.norms.push(cache);
                t.active.push(active);
            } else {
                h = next;
            }
        }
        unreachable!("network has at least one layer")
    }

    pub fn predict(&self, x: &Signal) -> Result<Vec<f64>> {
        self.run(x, None)
    }

    pub fn forward(&mut self, x: &Signal) -> Result<Vec<f64>> {
        let mut tape = ConvTape { inputs: Vec::new(), norms: Vec::new(), active: Vec::new() };
        let y = self.run(x, Some(&mut tape))?;
        self.tape = Some(tape);
        Ok(y)
    }

    pub fn backward(&mut self, grad_out: &[f64]) -> Result<Signal> {
        let tape = self.tape.take().ok_or_else(|| Error::State("backward called without a forward pass".into()))?;
        let len = tape.inputs[0].len;
        let out_channels = self.convs.last().map_or(0, |c| c.shape.outputs);
        let mut g = Signal::new(out_channels, len, grad_out.to_vec())?;
        for i in (0..self.convs.len()).rev() {
            g = self.convs[i].backward(&tape.inputs[i], &g);
            if i > 0 {
                for (gv, &on) in g.data.iter_mut().zip(&tape.active[i - 1]) {
                    if !on {
                        *gv = 0.0;
                    }
                }
                g = instance_norm_backward(&tape.norms[i - 1], &g);
            }
        }
        Ok(g)
    }
}

impl Parameterized for BlcNet {
    fn tensors(&mut self) -> Vec<(&mut [f64], &mut [f64])> {
        self.convs.iter_mut().flat_map(|l| l.tensors()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_counts() {
        let p = ParamNet::zeros();
        assert_eq!(p.layer_param_counts(), vec![832, 8320, 33024, 65792, 771]);
        assert_eq!(p.layer_param_counts().iter().sum::<usize>(), 108_739);
        let b = BlcNet::zeros();
        assert_eq!(
            b.layer_param_counts(),
            vec![2304, 20544, 41088, 82048, 164096, 327936, 655872, 1311232, 2561]
        );
        assert_eq!(b.layer_param_counts().iter().sum::<usize>(), 2_607_681);
    }

    #[test]
    fn zero_networks_output_zero() {
        assert_eq!(ParamNet::zeros().predict(&[1.0; 24], 2).unwrap(), vec![0.0; 6]);
        for k in [64, 128] {
            let out = BlcNet::zeros().predict(&Signal::new(7, k, vec![0.5; 7 * k]).unwrap()).unwrap();
            assert_eq!(out, vec![0.0; k]);
        }
    }

    #[test]
    fn backward_needs_forward() {
        assert!(matches!(ParamNet::zeros().backward(&[0.0; 3]), Err(Error::State(_))));
        let mut net = BlcNet::from_channels(&[2, 3, 1], 3, Some(1)).unwrap();
        assert!(matches!(net.backward(&[0.0; 8]), Err(Error::State(_))));
        let x = Signal::new(2, 8, (0..16).map(|i| (i as f64).sin()).collect()).unwrap();
        net.forward(&x).unwrap();
        assert!(net.backward(&[1.0; 8]).is_ok());
        assert!(matches!(net.backward(&[1.0; 8]), Err(Error::State(_))));
    }

    #[test]
    fn seeded_init_is_reproducible() {
        let a = ParamNet::new(9);
        let b = ParamNet::new(9);
        assert_eq!(a.layers[2].weights, b.layers[2].weights);
        assert_ne!(a.layers[2].weights, ParamNet::new(10).layers[2].weights);
    }
}
