//! Dense networks with manual backpropagation, Adam, losses, parameter
//! noise and snapshots.

pub mod adam;
pub mod loss;
pub mod mlp;
pub mod noise;
pub mod snapshot;

pub use adam::{AdamConfig, AdamState, DEFAULT_LEARNING_RATE};
pub use mlp::{Dense, ForwardCache, Gradients, Mlp, OutputActivation};
pub use noise::{apply_param_noise, GaussianParamNoise};
pub use snapshot::{from_snapshot, to_snapshot};

/// Hidden layer widths used for every agent unless overridden.
pub const DEFAULT_HIDDEN: [usize; 3] = [256, 128, 128];
