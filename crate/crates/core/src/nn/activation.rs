use serde::{Deserialize, Serialize};

pub const LEAKY_SLOPE: f64 = 0.2;

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        slope * x
    }
}

pub fn linear(x: f64) -> f64 {
    x
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu,
    Linear,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => relu(x),
            Activation::LeakyRelu => leaky_relu(x, LEAKY_SLOPE),
            Activation::Linear => linear(x),
        }
    }

    /// Derivative at the pre-activation value `x`; 0 is taken at the ReLU kink.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu => {
                if x >= 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Linear => 1.0,
        }
    }

    pub fn forward(self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&v| self.apply(v)).collect()
    }

    /// Gradient with respect to the pre-activation values `x`.
    pub fn backward(self, x: &[f64], grad_y: &[f64]) -> Vec<f64> {
        x.iter().zip(grad_y).map(|(&v, g)| g * self.derivative(v)).collect()
    }
}
