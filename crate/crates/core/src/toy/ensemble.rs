//! Seed ensembles of Jacobian profiles.
//!
//! Member `k` uses seed `base_seed + k` for both weights and embeddings.
//! Members run in parallel and are collected in seed order, so results do
//! not depend on the worker count.

use rayon::prelude::*;

use super::config::{AttentionMode, ToyModelConfig};
use super::model::{init_model, sample_embeddings, Probe};
use super::{jacobian_profile, softmax::attention_row};
use crate::error::{Error, Result};
use crate::metrics::{compare, FitReport};
use crate::profile::InfluenceProfile;

fn member_config(config: &ToyModelConfig, base_seed: u64, k: usize) -> ToyModelConfig {
    ToyModelConfig { seed: base_seed.wrapping_add(k as u64), ..config.clone() }
}

/// One member's profile scaled to unit total.
pub fn member_profile(config: &ToyModelConfig, probe: &Probe) -> Result<Vec<f64>> {
    let model = init_model(config)?;
    let embeddings = sample_embeddings(config, config.seed);
    let u = probe.vector(config.d)?;
    let raw = jacobian_profile(&model, &embeddings, &u)?.values;
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegenerateDistribution(format!("seed {} produced a zero profile", config.seed)));
    }
    Ok(raw.into_iter().map(|x| x / total).collect())
}

/// Linear-interpolation percentile (`p` in `[0, 100]`) of sorted data.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p / 100.0 * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Mean profile with p16/p84 bands and the raw per-seed matrix.
pub fn summarize(members: Vec<Vec<f64>>) -> Result<InfluenceProfile> {
    let n = members.len();
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one seed".into()));
    }
    let len = members[0].len();
    let mut mean = vec![0.0; len];
    let mut p16 = vec![0.0; len];
    let mut p84 = vec![0.0; len];
    let mut column = vec![0.0; n];
    for j in 0..len {
        for (c, m) in column.iter_mut().zip(&members) {
            *c = m[j];
        }
        mean[j] = column.iter().sum::<f64>() / n as f64;
        column.sort_by(f64::total_cmp);
        p16[j] = percentile_sorted(&column, 16.0);
        p84[j] = percentile_sorted(&column, 84.0);
    }
    Ok(InfluenceProfile { values: mean, scale: Default::default(), ensemble: Some(members), p16: Some(p16), p84: Some(p84) })
}

/// Ensemble of `n_seeds` normalized Jacobian profiles.
pub fn simulate(config: &ToyModelConfig, n_seeds: usize, base_seed: u64, probe: &Probe) -> Result<InfluenceProfile> {
    if n_seeds == 0 {
        return Err(Error::InvalidParameter("need at least one seed".into()));
    }
    config.validate()?;
    let members = (0..n_seeds)
        .into_par_iter()
        .map(|k| member_profile(&member_config(config, base_seed, k), probe))
        .collect::<Result<Vec<_>>>()?;
    summarize(members)
}

/// Fit report between seed-matched RoPE and no-RoPE ensemble means. The
/// two configs may differ only in `rope_enabled`.
pub fn rope_invariance_check(
    with_rope: &ToyModelConfig,
    without_rope: &ToyModelConfig,
    n_seeds: usize,
    base_seed: u64,
    probe: &Probe,
) -> Result<FitReport> {
    let aligned = ToyModelConfig { rope_enabled: with_rope.rope_enabled, ..without_rope.clone() };
    if aligned != *with_rope {
        return Err(Error::InvalidComparison("configs differ in more than rope_enabled".into()));
    }
    if with_rope.attention_mode != AttentionMode::SoftmaxRandom {
        return Err(Error::ModeMismatch("RoPE only acts in softmax-random mode".into()));
    }
    let a = simulate(with_rope, n_seeds, base_seed, probe)?;
    let b = simulate(without_rope, n_seeds, base_seed, probe)?;
    compare(&a.values, &b.values)
}

/// 1-based interior midpoint `⌈L/2⌉`.
pub fn midpoint(len: usize) -> usize {
    len.div_ceil(2).max(1)
}

/// Sample standard deviation across members at 1-based `position`.
pub fn across_seed_std(profile: &InfluenceProfile, position: usize) -> Result<f64> {
    let members = profile
        .ensemble
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("profile carries no ensemble".into()))?;
    if position == 0 || position > profile.len() {
        return Err(Error::Index(format!("position {position} outside 1..={}", profile.len())));
    }
    let n = members.len();
    if n < 2 {
        return Ok(0.0);
    }
    let vals: Vec<f64> = members.iter().map(|m| m[position - 1]).collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    Ok((vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt())
}

/// Across-seed std of the normalized profile at the interior midpoint for
/// each head count.
pub fn multihead_concentration(
    config: &ToyModelConfig,
    head_counts: &[usize],
    n_seeds: usize,
    base_seed: u64,
    probe: &Probe,
) -> Result<Vec<f64>> {
    for &h in head_counts {
        if h == 0 || !config.d.is_multiple_of(h) {
            return Err(Error::Config(format!("d = {} is not divisible by heads = {h}", config.d)));
        }
    }
    head_counts
        .iter()
        .map(|&h| {
            let c = ToyModelConfig { heads: h, ..config.clone() };
            let p = simulate(&c, n_seeds, base_seed, probe)?;
            across_seed_std(&p, midpoint(c.len))
        })
        .collect()
}

/// Mean over seeds of `max_j |A_{L,j} - 1/L|` for the first layer's first
/// head.
pub fn attention_uniformity(config: &ToyModelConfig, n_seeds: usize, base_seed: u64) -> Result<f64> {
    if n_seeds == 0 {
        return Err(Error::InvalidParameter("need at least one seed".into()));
    }
    let len = config.len;
    let devs = (0..n_seeds)
        .into_par_iter()
        .map(|k| {
            let c = member_config(config, base_seed, k);
            let model = init_model(&c)?;
            let row = attention_row(&model, 0, 0, len, &sample_embeddings(&c, c.seed))?;
            Ok(row.iter().fold(0.0f64, |m, a| m.max((a - 1.0 / len as f64).abs())))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(devs.iter().sum::<f64>() / n_seeds as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::config::InitScale;

    #[test]
    fn percentiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile_sorted(&v, 0.0), 1.0);
        assert_eq!(percentile_sorted(&v, 50.0), 3.0);
        assert!((percentile_sorted(&v, 16.0) - 1.64).abs() < 1e-12);
        assert!((percentile_sorted(&v, 84.0) - 4.36).abs() < 1e-12);
    }

    #[test]
    fn simulate_is_deterministic_and_normalized() {
        let c = ToyModelConfig { len: 32, d: 16, depth: 4, ..Default::default() };
        let a = simulate(&c, 6, 11, &Probe::Ones).unwrap();
        let b = simulate(&c, 6, 11, &Probe::Ones).unwrap();
        assert_eq!(a, b);
        assert!((a.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (lo, hi) = (a.p16.as_ref().unwrap(), a.p84.as_ref().unwrap());
        assert!(lo.iter().zip(hi).all(|(l, h)| l <= h));
    }

    #[test]
    fn rope_check_rules() {
        let on = ToyModelConfig { len: 16, d: 8, depth: 2, d_k: 4, attention_mode: AttentionMode::SoftmaxRandom, rope_enabled: true, ..Default::default() };
        let r = rope_invariance_check(&on, &on, 4, 0, &Probe::Ones).unwrap();
        assert!((r.spearman - 1.0).abs() < 1e-12 && r.wasserstein1 == 0.0);
        let off = ToyModelConfig { rope_enabled: false, d: 16, ..on.clone() };
        assert!(matches!(rope_invariance_check(&on, &off, 4, 0, &Probe::Ones), Err(Error::InvalidComparison(_))));
    }

    #[test]
    fn concentration_edge_cases() {
        let c = ToyModelConfig { len: 16, d: 8, depth: 3, ..Default::default() };
        let s = multihead_concentration(&c, &[1, 1], 5, 3, &Probe::Ones).unwrap();
        assert_eq!(s[0], s[1]);
        assert!(matches!(multihead_concentration(&c, &[3], 5, 3, &Probe::Ones), Err(Error::Config(_))));
        let scalar = ToyModelConfig { init_scale: InitScale::ScalarGain { gamma: 1.0 }, ..c };
        assert_eq!(multihead_concentration(&scalar, &[1, 2, 4], 5, 3, &Probe::Ones).unwrap(), vec![0.0; 3]);
    }
}
