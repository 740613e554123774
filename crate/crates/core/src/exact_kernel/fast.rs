//! O(L) and O(L·d) applications of the Cesàro averaging matrix without
//! materializing it.
//!
//! `(M v)_i = (1/i) Σ_{k≤i} v_k` is a running prefix mean and
//! `(Mᵀ v)_j = Σ_{i≥j} v_i / i` is a suffix sum of `v_i / i`. Both loops run
//! in a fixed order, so results are bit-for-bit reproducible.

use ndarray::{Array2, ArrayView2, Axis, Zip};

use crate::error::{Error, Result};

/// `Mᵀ v` in place.
pub fn cesaro_transpose_in_place(v: &mut [f64]) {
    let mut acc = 0.0;
    for (idx, x) in v.iter_mut().enumerate().rev() {
        acc += *x / (idx + 1) as f64;
        *x = acc;
    }
}

/// `M v` in place.
pub fn cesaro_in_place(v: &mut [f64]) {
    let mut acc = 0.0;
    for (idx, x) in v.iter_mut().enumerate() {
        acc += *x;
        *x = acc / (idx + 1) as f64;
    }
}

/// `Nᵀ v` with `N = (1-α)I + αM`, in O(L).
pub fn apply_transpose_fast(profile: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = profile.to_vec();
    cesaro_transpose_in_place(&mut out);
    for (o, &p) in out.iter_mut().zip(profile) {
        *o = (1.0 - alpha) * p + alpha * *o;
    }
    out
}

/// Checked variant of [`apply_transpose_fast`] for callers that carry an
/// expected length.
pub fn apply_transpose_checked(profile: &[f64], alpha: f64, len: usize) -> Result<Vec<f64>> {
    if profile.len() != len {
        return Err(Error::DimensionMismatch { expected: len, got: profile.len() });
    }
    Ok(apply_transpose_fast(profile, alpha))
}

/// `N v` in O(L).
pub fn apply_fast(profile: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = profile.to_vec();
    cesaro_in_place(&mut out);
    for (o, &p) in out.iter_mut().zip(profile) {
        *o = (1.0 - alpha) * p + alpha * *o;
    }
    out
}

/// Row-wise causal prefix mean of an `L × d` matrix: row `i` becomes the
/// mean of rows `1..=i`. This is `M h` for a sequence of hidden states.
pub fn causal_prefix_mean(h: ArrayView2<f64>) -> Array2<f64> {
    let mut out = h.to_owned();
    let d = h.ncols();
    let mut acc = vec![0.0; d];
    for (idx, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        let inv = 1.0 / (idx + 1) as f64;
        Zip::from(&mut row).and(&mut acc[..]).for_each(|x, a| {
            *a += *x;
            *x = *a * inv;
        });
    }
    out
}

/// Row-wise `Mᵀ g`: row `j` becomes `Σ_{i≥j} g_i / i`.
pub fn causal_suffix_transpose(g: ArrayView2<f64>) -> Array2<f64> {
    let mut out = g.to_owned();
    let d = g.ncols();
    let mut acc = vec![0.0; d];
    for (idx, mut row) in out.axis_iter_mut(Axis(0)).enumerate().rev() {
        let inv = 1.0 / (idx + 1) as f64;
        Zip::from(&mut row).and(&mut acc[..]).for_each(|x, a| {
            *a += *x * inv;
            *x = *a;
        });
    }
    out
}

/// Last row of `N^H` by `H` transposed applications to the unit vector at
/// position `L`. O(L·H) and numerically stable (non-negative stochastic
/// factors only).
pub fn last_row_float(len: usize, h: u32, alpha: f64) -> Vec<f64> {
    let mut v = vec![0.0; len];
    if len == 0 {
        return v;
    }
    v[len - 1] = 1.0;
    for _ in 0..h {
        v = apply_transpose_fast(&v, alpha);
    }
    v
}
