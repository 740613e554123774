//! Toy causal-residual network at initialization and its Jacobian
//! profiles.

pub mod config;
pub mod ensemble;
pub mod fd;
pub mod linear;
pub mod model;
pub mod rope;
pub mod softmax;

use ndarray::{Array1, Array2};

pub use config::{AttentionMode, InitScale, ToyModelConfig};
pub use ensemble::{multihead_concentration, rope_invariance_check, simulate};
pub use fd::jacobian_profile_fd;
pub use linear::{forward_linear, jacobian_profile_linear};
pub use model::{init_model, sample_embeddings, Probe, ToyModel};
pub use rope::rope_rotate;
pub use softmax::{attention_row, score_value_ratio};

use crate::error::Result;
use crate::profile::InfluenceProfile;

/// Forward pass in whichever attention mode the model was built for.
pub fn forward(model: &ToyModel, embeddings: &Array2<f64>) -> Result<Array2<f64>> {
    match model.config.attention_mode {
        AttentionMode::UniformLinear => forward_linear(model, embeddings),
        AttentionMode::SoftmaxRandom => Ok(softmax::forward_softmax(model, embeddings)?.0),
    }
}

/// Analytic Jacobian profile; the embeddings are ignored in linear mode.
pub fn jacobian_profile(model: &ToyModel, embeddings: &Array2<f64>, probe: &Array1<f64>) -> Result<InfluenceProfile> {
    match model.config.attention_mode {
        AttentionMode::UniformLinear => jacobian_profile_linear(model, probe),
        AttentionMode::SoftmaxRandom => softmax::jacobian_profile_softmax(model, embeddings, probe),
    }
}
