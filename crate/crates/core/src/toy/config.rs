use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AttentionMode {
    /// Every layer attends with the Cesàro average `M`.
    #[default]
    UniformLinear,
    /// Causal softmax over random query/key projections.
    SoftmaxRandom,
}

impl AttentionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AttentionMode::UniformLinear => "uniform-linear",
            AttentionMode::SoftmaxRandom => "softmax-random",
        }
    }
}

impl fmt::Display for AttentionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttentionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform-linear" | "linear" => Ok(AttentionMode::UniformLinear),
            "softmax-random" | "softmax" => Ok(AttentionMode::SoftmaxRandom),
            other => Err(Error::Config(format!("unknown attention mode {other:?}"))),
        }
    }
}

/// How the per-head value/output gains are initialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitScale {
    /// `W_V`, `W_O` with i.i.d. `N(0, 1/d)` entries; `W_Q`, `W_K` with
    /// `N(0, 1/d_k)`.
    #[default]
    Kaiming,
    /// Deterministic `C_l = γ I` (each head contributes `γ/heads · I`).
    ScalarGain { gamma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyModelConfig {
    pub len: usize,
    pub depth: u32,
    pub d: usize,
    pub heads: usize,
    pub d_k: usize,
    /// Normalized mixing weight: each layer is `(1-α)I + α·attention`.
    pub alpha: f64,
    pub rope_enabled: bool,
    pub rope_theta: f64,
    pub attention_mode: AttentionMode,
    pub seed: u64,
    pub init_scale: InitScale,
    /// Divide scores by `√d_k`. Off by default: with `N(0, 1/d_k)` query
    /// and key weights the raw scores already have `O(d_k^{-1/2})` spread.
    #[serde(default)]
    pub score_temperature: bool,
}

impl Default for ToyModelConfig {
    fn default() -> Self {
        ToyModelConfig {
            len: 64,
            depth: 4,
            d: 64,
            heads: 1,
            d_k: 16,
            alpha: 0.5,
            rope_enabled: false,
            rope_theta: 10_000.0,
            attention_mode: AttentionMode::UniformLinear,
            seed: 0,
            init_scale: InitScale::Kaiming,
            score_temperature: false,
        }
    }
}

impl ToyModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.len == 0 || self.d == 0 || self.heads == 0 || self.d_k == 0 {
            return Err(Error::Config("L, d, heads and d_k must all be at least 1".into()));
        }
        if !self.d.is_multiple_of(self.heads) {
            return Err(Error::Config(format!("d = {} is not divisible by heads = {}", self.d, self.heads)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha = {} must lie in [0, 1]", self.alpha)));
        }
        if self.rope_enabled && !self.d_k.is_multiple_of(2) {
            return Err(Error::Config(format!("RoPE needs an even d_k, got {}", self.d_k)));
        }
        if !(self.rope_theta > 0.0) {
            return Err(Error::Config("rope_theta must be positive".into()));
        }
        if let InitScale::ScalarGain { gamma } = self.init_scale {
            if !gamma.is_finite() {
                return Err(Error::Config("scalar gain must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn head_width(&self) -> usize {
        self.d / self.heads
    }

    /// Unnormalized gain `α̃ = α / (1-α)` (infinite at `α = 1`).
    pub fn alpha_tilde(&self) -> f64 {
        alpha_tilde(self.alpha)
    }

    pub fn with_alpha_tilde(mut self, alpha_tilde: f64) -> Result<Self> {
        self.alpha = alpha_from_tilde(alpha_tilde)?;
        Ok(self)
    }
}

pub fn alpha_tilde(alpha: f64) -> f64 {
    alpha / (1.0 - alpha)
}

/// `α = α̃ / (1 + α̃)`, so that `I + α̃M` rescaled by `1/(1+α̃)` is
/// row-stochastic.
pub fn alpha_from_tilde(alpha_tilde: f64) -> Result<f64> {
    if alpha_tilde.is_infinite() && alpha_tilde > 0.0 {
        return Ok(1.0);
    }
    if !(alpha_tilde >= 0.0) {
        return Err(Error::Config(format!("alpha tilde = {alpha_tilde} must be non-negative")));
    }
    Ok(alpha_tilde / (1.0 + alpha_tilde))
}
