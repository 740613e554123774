//! Rotary position embedding: adjacent coordinate pairs `(2m, 2m+1)` are
//! rotated by `p · θ^{-2m/d_k}` at 0-based position `p`.

use crate::error::{Error, Result};

fn check_even(d_k: usize) -> Result<()> {
    if d_k.is_multiple_of(2) {
        Ok(())
    } else {
        Err(Error::InvalidDimension(format!("RoPE needs an even width, got {d_k}")))
    }
}

pub fn rope_rotate(v: &[f64], position: usize, theta: f64) -> Result<Vec<f64>> {
    check_even(v.len())?;
    let mut out = v.to_vec();
    RopeTable::new(v.len(), position + 1, theta)?.rotate(&mut out, position, false);
    Ok(out)
}

/// Precomputed `cos`/`sin` for positions `0..len` and every pair.
#[derive(Debug, Clone)]
pub struct RopeTable {
    pairs: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl RopeTable {
    pub fn new(d_k: usize, len: usize, theta: f64) -> Result<Self> {
        check_even(d_k)?;
        let pairs = d_k / 2;
        let mut cos = Vec::with_capacity(len * pairs);
        let mut sin = Vec::with_capacity(len * pairs);
        for p in 0..len {
            for m in 0..pairs {
                let freq = theta.powf(-2.0 * m as f64 / d_k as f64);
                let (s, c) = (p as f64 * freq).sin_cos();
                cos.push(c);
                sin.push(s);
            }
        }
        Ok(RopeTable { pairs, cos, sin })
    }

    /// Rotates `v` in place; `inverse` applies `R_pᵀ`.
    pub fn rotate(&self, v: &mut [f64], position: usize, inverse: bool) {
        let base = position * self.pairs;
        for m in 0..self.pairs {
            let (c, s) = (self.cos[base + m], self.sin[base + m]);
            let s = if inverse { -s } else { s };
            let (a, b) = (v[2 * m], v[2 * m + 1]);
            v[2 * m] = c * a - s * b;
            v[2 * m + 1] = s * a + c * b;
        }
    }
}
