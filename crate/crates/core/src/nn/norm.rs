//! Instance normalization without affine terms.

use super::layers::Signal;
use crate::error::{Error, Result};

pub const INSTANCE_NORM_EPS: f64 = 1e-5;

/// Values recorded by the forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct NormCache {
    pub output: Signal,
    pub inv_std: Vec<f64>,
}

/// Per channel: `(x - mean) / sqrt(var + eps)` with the population variance.
pub fn instance_norm(x: &Signal) -> Result<Signal> {
    Ok(instance_norm_forward(x)?.output)
}

pub fn instance_norm_forward(x: &Signal) -> Result<NormCache> {
    if x.len < 2 {
        return Err(Error::invalid(format!("instance norm needs at least 2 positions, got {}", x.len)));
    }
    let n = x.len as f64;
    let mut out = Signal::zeros(x.channels, x.len);
    let mut inv_std = Vec::with_capacity(x.channels);
    for c in 0..x.channels {
        let src = x.channel(c);
        let mean = src.iter().sum::<f64>() / n;
        let var = src.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let s = 1.0 / (var + INSTANCE_NORM_EPS).sqrt();
        for (o, v) in out.channel_mut(c).iter_mut().zip(src) {
            *o = (v - mean) * s;
        }
        inv_std.push(s);
    }
    Ok(NormCache { output: out, inv_std })
}

/// `dx = s * (dy - mean(dy) - y * mean(dy * y))` per channel.
pub fn instance_norm_backward(cache: &NormCache, grad_y: &Signal) -> Signal {
    let y = &cache.output;
    assert_eq!((grad_y.channels, grad_y.len), (y.channels, y.len));
    let n = y.len as f64;
    let mut grad_x = Signal::zeros(y.channels, y.len);
    for c in 0..y.channels {
        let (yc, dy) = (y.channel(c), grad_y.channel(c));
        let mean_dy = dy.iter().sum::<f64>() / n;
        let mean_dyy = dy.iter().zip(yc).map(|(d, v)| d * v).sum::<f64>() / n;
        let s = cache.inv_std[c];
        for ((g, d), v) in grad_x.channel_mut(c).iter_mut().zip(dy).zip(yc) {
            *g = s * (d - mean_dy - v * mean_dyy);
        }
    }
    grad_x
}
