//! Per-position influence profiles, optionally carrying a seed ensemble.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Raw,
    Log10,
}

/// `values[j-1]` is the influence of position `j` on the final position.
/// When built from an ensemble, `values` is the mean and `p16`/`p84` the
/// per-position percentile bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceProfile {
    pub values: Vec<f64>,
    #[serde(default)]
    pub scale: Scale,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p16: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p84: Option<Vec<f64>>,
}

impl InfluenceProfile {
    pub fn new(values: Vec<f64>) -> Self {
        InfluenceProfile { values, scale: Scale::Raw, ensemble: None, p16: None, p84: None }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Grid coordinate `x_j = j / L` for each position.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.len() as f64;
        (1..=self.len()).map(|j| j as f64 / n).collect()
    }

    /// Log10 view with values below `floor` clamped to it; the second
    /// element flags clamped positions.
    pub fn to_log10(&self, floor: f64) -> Result<(InfluenceProfile, Vec<bool>)> {
        if self.scale == Scale::Log10 {
            return Err(Error::InvalidParameter("profile is already on a log10 scale".into()));
        }
        if !(floor > 0.0) {
            return Err(Error::InvalidParameter("log floor must be positive".into()));
        }
        let clamp = |v: &[f64]| v.iter().map(|&x| x.max(floor).log10()).collect::<Vec<_>>();
        let flags = self.values.iter().map(|&x| x < floor).collect();
        Ok((
            InfluenceProfile {
                values: clamp(&self.values),
                scale: Scale::Log10,
                ensemble: self.ensemble.as_ref().map(|e| e.iter().map(|r| clamp(r)).collect()),
                p16: self.p16.as_deref().map(clamp),
                p84: self.p84.as_deref().map(clamp),
            },
            flags,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_log() {
        let p = InfluenceProfile::new(vec![100.0, 0.0, 1.0, 10.0]);
        assert_eq!(p.grid(), vec![0.25, 0.5, 0.75, 1.0]);
        let (l, flags) = p.to_log10(1e-300).unwrap();
        assert_eq!(l.values, vec![2.0, -300.0, 0.0, 1.0]);
        assert_eq!(flags, vec![false, true, false, false]);
        assert!(l.to_log10(1e-300).is_err());
    }
}
