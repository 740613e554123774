//! Uniform-attention network: `h ← (1-α) h + α (M h) C_l`.

use ndarray::{Array1, Array2};

use super::config::AttentionMode;
use super::model::ToyModel;
use crate::error::{Error, Result};
use crate::exact_kernel::fast::{causal_prefix_mean, causal_suffix_transpose};
use crate::profile::InfluenceProfile;

fn require_linear(model: &ToyModel) -> Result<()> {
    if model.config.attention_mode != AttentionMode::UniformLinear {
        return Err(Error::ModeMismatch("operation needs uniform-linear attention".into()));
    }
    Ok(())
}

pub fn forward_linear(model: &ToyModel, embeddings: &Array2<f64>) -> Result<Array2<f64>> {
    require_linear(model)?;
    model.check_embeddings(embeddings)?;
    let alpha = model.config.alpha;
    let mut h = embeddings.clone();
    for layer in &model.layers {
        let mixed = causal_prefix_mean(h.view()).dot(&layer.gain);
        h = h * (1.0 - alpha) + mixed * alpha;
    }
    Ok(h)
}

/// Gradients `g_j = ∂(uᵀ h_L^{(H)})/∂h_j^{(0)}` for every position, by
/// exact backward propagation `g ← (1-α) g + α Mᵀ (g C_lᵀ)`.
pub fn gradients_linear(model: &ToyModel, probe: &Array1<f64>) -> Result<Array2<f64>> {
    require_linear(model)?;
    model.check_probe(probe)?;
    let (len, d, alpha) = (model.config.len, model.config.d, model.config.alpha);
    let mut g = Array2::zeros((len, d));
    g.row_mut(len - 1).assign(probe);
    for layer in model.layers.iter().rev() {
        let through = causal_suffix_transpose(g.dot(&layer.gain.t()).view());
        g = g * (1.0 - alpha) + through * alpha;
    }
    Ok(g)
}

/// Per-position gradient norms `ρ(j) = ‖g_j‖₂`. Independent of the
/// embeddings because the network is linear.
pub fn jacobian_profile_linear(model: &ToyModel, probe: &Array1<f64>) -> Result<InfluenceProfile> {
    let g = gradients_linear(model, probe)?;
    Ok(InfluenceProfile::new(row_norms(&g)))
}

pub fn row_norms(g: &Array2<f64>) -> Vec<f64> {
    g.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect()
}
