//! Feed-forward network substrate: MLPs, exact backprop, Adam, and
//! target-network synchronization.

mod adam;
mod mlp;

pub use adam::AdamState;
pub use mlp::{Activation, ForwardCache, Gradients, Mlp};
