//! Agreement statistics between influence profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} contains non-finite values")))
    }
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &idx[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    // sqrt(fl(s·s)) == s, so identical inputs give exactly 1.
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation: Pearson correlation of average ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    if a.len() < 3 {
        return Err(Error::InvalidParameter("spearman needs at least 3 positions".into()));
    }
    check_finite("first profile", a)?;
    check_finite("second profile", b)?;
    pearson(&average_ranks(a), &average_ranks(b))
        .ok_or_else(|| Error::UndefinedCorrelation("a profile has constant ranks".into()))
}

/// Probability weights on an explicit grid in `[0, 1]` plus a separate
/// point mass at `x = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
    pub point_mass_at_one: f64,
}

/// Scales `values` and `point_mass` so their total is one.
pub fn normalize_to_distribution(grid: &[f64], values: &[f64], point_mass: f64) -> Result<Distribution> {
    if grid.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
    }
    check_finite("profile", values)?;
    if values.iter().any(|&v| v < 0.0) || point_mass < 0.0 || !point_mass.is_finite() {
        return Err(Error::Domain("distribution weights must be non-negative".into()));
    }
    if grid.iter().any(|x| !(0.0..=1.0).contains(x)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::GridMismatch("grid must be strictly increasing within [0, 1]".into()));
    }
    let total = values.iter().sum::<f64>() + point_mass;
    if !(total > 0.0) {
        return Err(Error::DegenerateDistribution("all weights are zero".into()));
    }
    Ok(Distribution {
        grid: grid.to_vec(),
        weights: values.iter().map(|v| v / total).collect(),
        point_mass_at_one: point_mass / total,
    })
}

/// Positions `j = 1..=L` mapped to `x_j = j / L`.
pub fn position_grid(len: usize) -> Vec<f64> {
    (1..=len).map(|j| j as f64 / len as f64).collect()
}

/// Normalizes a per-position profile on the `j / L` grid.
pub fn normalize_profile(values: &[f64]) -> Result<Distribution> {
    normalize_to_distribution(&position_grid(values.len()), values, 0.0)
}

impl Distribution {
    /// Support points with the point mass merged into `x = 1`.
    fn atoms(&self) -> (Vec<f64>, Vec<f64>) {
        let mut xs = self.grid.clone();
        let mut ws = self.weights.clone();
        if self.point_mass_at_one > 0.0 || xs.last() != Some(&1.0) {
            if xs.last() == Some(&1.0) {
                *ws.last_mut().unwrap() += self.point_mass_at_one;
            } else {
                xs.push(1.0);
                ws.push(self.point_mass_at_one);
            }
        }
        (xs, ws)
    }
}

/// `W₁ = Σ_k |F_p(x_k) - F_q(x_k)| (x_{k+1} - x_k)` on the shared grid.
pub fn wasserstein1(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.grid != q.grid {
        return Err(Error::GridMismatch(format!(
            "distributions live on different grids ({} vs {} points)",
            p.grid.len(),
            q.grid.len()
        )));
    }
    let (xs, wp) = p.atoms();
    let (_, wq) = q.atoms();
    let (mut fp, mut fq, mut w1) = (0.0, 0.0, 0.0);
    for k in 0..xs.len().saturating_sub(1) {
        fp += wp[k];
        fq += wq[k];
        w1 += (fp - fq).abs() * (xs[k + 1] - xs[k]);
    }
    Ok(w1)
}

/// `log10(max(first, last) / min(interior))` where the interior drops
/// `margin` positions at each end.
pub fn peak_to_trough(values: &[f64], margin: usize) -> Result<f64> {
    let n = values.len();
    if n < 3 || n <= 2 * margin {
        return Err(Error::InvalidParameter(format!(
            "peak-to-trough needs an interior: {n} positions, margin {margin}"
        )));
    }
    if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain("peak-to-trough needs positive finite values".into()));
    }
    let peak = values[0].max(values[n - 1]);
    let trough = values[margin..n - margin].iter().copied().fold(f64::INFINITY, f64::min);
    Ok((peak / trough).log10())
}

/// Index of the smallest value (first on ties).
pub fn argmin(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
}

/// Summary of how well one profile matches another.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub spearman: f64,
    pub wasserstein1: f64,
    /// Of the first profile; `null` when it has non-positive values.
    pub peak_to_trough_log10: Option<f64>,
    pub n_positions: usize,
}

/// Compares two per-position profiles on the `j / L` grid.
pub fn compare(a: &[f64], b: &[f64]) -> Result<FitReport> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("profiles have {} and {} positions", a.len(), b.len())));
    }
    let spearman = spearman(a, b)?;
    let wasserstein1 = wasserstein1(&normalize_profile(a)?, &normalize_profile(b)?)?;
    Ok(FitReport { spearman, wasserstein1, peak_to_trough_log10: peak_to_trough(a, 1).ok(), n_positions: a.len() })
}

/// Thresholds that turn a [`FitReport`] into a pass/fail decision.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Gate {
    pub min_spearman: Option<f64>,
    pub max_wasserstein: Option<f64>,
}

impl Gate {
    /// Human-readable violations; empty when every threshold holds.
    pub fn violations(&self, r: &FitReport) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(t) = self.min_spearman {
            if !(r.spearman >= t) {
                out.push(format!("spearman {} < {t}", r.spearman));
            }
        }
        if let Some(t) = self.max_wasserstein {
            if !(r.wasserstein1 <= t) {
                out.push(format!("wasserstein1 {} > {t}", r.wasserstein1));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spearman_examples() {
        let a = [1.0, 2.5, 3.0, 7.0, 9.0];
        assert_eq!(spearman(&a, &a).unwrap(), 1.0);
        let r: Vec<f64> = a.iter().rev().copied().collect();
        assert!((spearman(&a, &r).unwrap() + 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-15);
        assert!(matches!(spearman(&[1.0; 4], &a[..4]), Err(Error::UndefinedCorrelation(_))));
        assert!(spearman(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn normalization() {
        let d = normalize_to_distribution(&[0.25, 0.75], &[2.0, 2.0], 0.0).unwrap();
        assert_eq!(d.weights, vec![0.5, 0.5]);
        let d = normalize_to_distribution(&[0.5, 1.0], &[0.5, 0.25], 0.25).unwrap();
        assert_eq!((d.weights.clone(), d.point_mass_at_one), (vec![0.5, 0.25], 0.25));
        assert!(matches!(normalize_profile(&[0.0, 0.0]), Err(Error::DegenerateDistribution(_))));
        assert!(normalize_profile(&[1.0, -1.0, 3.0]).is_err());
    }

    #[test]
    fn wasserstein_examples() {
        let grid = [0.0, 0.25, 0.75, 1.0];
        let at0 = normalize_to_distribution(&grid, &[1.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        let at1 = normalize_to_distribution(&grid, &[0.0, 0.0, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(wasserstein1(&at0, &at0).unwrap(), 0.0);
        assert!((wasserstein1(&at0, &at1).unwrap() - 1.0).abs() < 1e-15);
        let p = normalize_to_distribution(&grid, &[0.0, 0.5, 0.5, 0.0], 0.0).unwrap();
        let q = normalize_to_distribution(&grid, &[0.0, 1.0, 0.0, 0.0], 0.0).unwrap();
        assert!((wasserstein1(&p, &q).unwrap() - 0.25).abs() < 1e-15);
        let other = normalize_to_distribution(&[0.5, 1.0], &[1.0, 1.0], 0.0).unwrap();
        assert!(matches!(wasserstein1(&p, &other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn point_mass_without_grid_endpoint() {
        let grid = [0.5];
        let p = normalize_to_distribution(&grid, &[1.0], 0.0).unwrap();
        let q = normalize_to_distribution(&grid, &[0.0], 1.0).unwrap();
        assert!((wasserstein1(&p, &q).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn peak_to_trough_examples() {
        assert_eq!(peak_to_trough(&[3.0; 6], 1).unwrap(), 0.0);
        assert!((peak_to_trough(&[10.0, 1.0, 10.0], 1).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(peak_to_trough(&[1.0, 0.0, 1.0], 1), Err(Error::Domain(_))));
        assert!(peak_to_trough(&[1.0, 2.0], 1).is_err());
    }

    #[test]
    fn gates() {
        let r = compare(&[3.0, 1.0, 2.0, 5.0], &[3.0, 1.0, 2.0, 5.0]).unwrap();
        assert!((r.spearman - 1.0).abs() < 1e-15);
        assert_eq!((r.wasserstein1, r.n_positions), (0.0, 4));
        let g = Gate { min_spearman: Some(0.95), max_wasserstein: Some(0.05) };
        assert!(g.violations(&r).is_empty());
        let u = compare(&[1.0; 5], &[5.0, 1.0, 0.5, 1.0, 5.0]);
        assert!(matches!(u, Err(Error::UndefinedCorrelation(_))));
        let json = serde_json::to_value(r).unwrap();
        assert_eq!(json["n_positions"], 4);
        assert!(json.get("peak_to_trough_log10").is_some());
    }

    fn dist(v: &[f64]) -> Distribution {
        normalize_profile(v).unwrap()
    }

    proptest! {
        #[test]
        fn spearman_monotone_invariance(v in proptest::collection::vec(-5.0f64..5.0, 3..40),
                                        w in proptest::collection::vec(-5.0f64..5.0, 3..40),
                                        scale in 0.1f64..10.0, shift in -3.0f64..3.0) {
            let n = v.len().min(w.len());
            let (v, w) = (&v[..n], &w[..n]);
            if let Ok(base) = spearman(v, w) {
                let ev: Vec<f64> = v.iter().map(|x| x.exp()).collect();
                let av: Vec<f64> = w.iter().map(|x| scale * x + shift).collect();
                prop_assert!((spearman(&ev, w).unwrap() - base).abs() < 1e-12);
                prop_assert!((spearman(v, &av).unwrap() - base).abs() < 1e-12);
            }
        }

        #[test]
        fn wasserstein_metric(a in proptest::collection::vec(0.01f64..1.0, 2..30),
                              b in proptest::collection::vec(0.01f64..1.0, 2..30),
                              c in proptest::collection::vec(0.01f64..1.0, 2..30)) {
            let n = a.len().min(b.len()).min(c.len());
            let (p, q, r) = (dist(&a[..n]), dist(&b[..n]), dist(&c[..n]));
            let pq = wasserstein1(&p, &q).unwrap();
            prop_assert!((pq - wasserstein1(&q, &p).unwrap()).abs() < 1e-15);
            prop_assert!(pq <= wasserstein1(&p, &r).unwrap() + wasserstein1(&r, &q).unwrap() + 1e-12);
            prop_assert!((0.0..=1.0).contains(&pq));
        }

        #[test]
        fn peak_to_trough_scale_invariant(v in proptest::collection::vec(0.01f64..100.0, 3..30), s in 1e-3f64..1e3) {
            let scaled: Vec<f64> = v.iter().map(|x| x * s).collect();
            prop_assert!((peak_to_trough(&v, 1).unwrap() - peak_to_trough(&scaled, 1).unwrap()).abs() < 1e-12);
        }
    }
}
