//! Minimal deterministic network engine in f64.
//!
//! Layers expose explicit `forward`/`backward` pairs; the two networks used by
//! the prediction stages record a tape on `forward` and consume it on
//! `backward`. Gradients accumulate until [`Parameterized::zero_grad`].

mod activation;
mod bundle;
mod layers;
pub(crate) mod linalg;
mod loss;
mod nets;
mod norm;
mod optim;

pub use activation::{leaky_relu, linear, relu, Activation, LEAKY_SLOPE};
pub use bundle::{decode_weights, encode_weights, scatter_params, WEIGHT_MAGIC};
pub use layers::{conv1d_apply, dense_apply, Conv1d, ConvShape, Dense, DenseShape, Signal};
pub use loss::{loss_mae, loss_mse, Loss};
pub use nets::{BlcNet, ParamNet, BLC_CHANNELS, BLC_KERNEL, PARAM_WIDTHS};
pub use norm::{instance_norm, instance_norm_backward, instance_norm_forward, NormCache, INSTANCE_NORM_EPS};
pub use optim::{plateau_scheduler_update, Adam, AdamConfig, Parameterized, PlateauConfig, PlateauScheduler};
