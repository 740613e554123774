use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::{AttentionMode, InitScale, ToyModelConfig};
use crate::error::{Error, Result};

/// Independent random streams derived from one seed.
const WEIGHT_STREAM: u64 = 0;
const EMBEDDING_STREAM: u64 = 1;
const PROBE_STREAM: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, variance: f64) -> Array2<f64> {
    let sd = variance.sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.sample::<f64, _>(StandardNormal) * sd)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    /// `W_V` (`d × d/heads`) and `W_O` (`d/heads × d`); absent for scalar
    /// gains.
    pub w_v: Option<Array2<f64>>,
    pub w_o: Option<Array2<f64>>,
    /// Folded value-output gain `W_V W_O` (`d × d`).
    pub gain: Array2<f64>,
    /// `W_Q`, `W_K` (`d × d_k`) in softmax mode.
    pub w_q: Option<Array2<f64>>,
    pub w_k: Option<Array2<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub heads: Vec<Head>,
    /// `C_l = Σ_h W_V^h W_O^h`.
    pub gain: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub config: ToyModelConfig,
    pub layers: Vec<Layer>,
}

/// Deterministic weights for `config.seed`. All value/output weights are
/// drawn first (layer-major, then head), then all query/key weights, so
/// linear and softmax models with the same seed share their gains.
pub fn init_model(config: &ToyModelConfig) -> Result<ToyModel> {
    config.validate()?;
    let (d, dh, nh) = (config.d, config.head_width(), config.heads);
    let mut r = rng(config.seed, WEIGHT_STREAM);
    let mut layers: Vec<Layer> = (0..config.depth)
        .map(|_| {
            let heads: Vec<Head> = (0..nh)
                .map(|_| match config.init_scale {
                    InitScale::Kaiming => {
                        let w_v = gaussian(&mut r, d, dh, 1.0 / d as f64);
                        let w_o = gaussian(&mut r, dh, d, 1.0 / d as f64);
                        let gain = w_v.dot(&w_o);
                        Head { w_v: Some(w_v), w_o: Some(w_o), gain, w_q: None, w_k: None }
                    }
                    InitScale::ScalarGain { gamma } => Head {
                        w_v: None,
                        w_o: None,
                        gain: Array2::eye(d) * (gamma / nh as f64),
                        w_q: None,
                        w_k: None,
                    },
                })
                .collect();
            let mut gain = Array2::zeros((d, d));
            for h in &heads {
                gain += &h.gain;
            }
            Layer { heads, gain }
        })
        .collect();
    if config.attention_mode == AttentionMode::SoftmaxRandom {
        let var = 1.0 / config.d_k as f64;
        for layer in &mut layers {
            for head in &mut layer.heads {
                head.w_q = Some(gaussian(&mut r, d, config.d_k, var));
                head.w_k = Some(gaussian(&mut r, d, config.d_k, var));
            }
        }
    }
    Ok(ToyModel { config: config.clone(), layers })
}

impl ToyModel {
    /// FNV-1a over the bit patterns of every weight, in storage order.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |m: &Array2<f64>| {
            for x in m.iter() {
                for b in x.to_bits().to_le_bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
        };
        for layer in &self.layers {
            for head in &layer.heads {
                for m in [&head.w_v, &head.w_o, &head.w_q, &head.w_k].into_iter().flatten() {
                    eat(m);
                }
                eat(&head.gain);
            }
        }
        h
    }

    /// Zeroes every query/key projection (scores become identically zero).
    pub fn zero_query_key(mut self) -> Self {
        for layer in &mut self.layers {
            for head in &mut layer.heads {
                if let Some(w) = head.w_q.as_mut() {
                    w.fill(0.0);
                }
                if let Some(w) = head.w_k.as_mut() {
                    w.fill(0.0);
                }
            }
        }
        self
    }

    pub fn check_embeddings(&self, h: &Array2<f64>) -> Result<()> {
        let c = &self.config;
        if h.nrows() != c.len {
            return Err(Error::DimensionMismatch { expected: c.len, got: h.nrows() });
        }
        if h.ncols() != c.d {
            return Err(Error::DimensionMismatch { expected: c.d, got: h.ncols() });
        }
        Ok(())
    }

    pub fn check_probe(&self, probe: &Array1<f64>) -> Result<()> {
        if probe.len() != self.config.d {
            return Err(Error::DimensionMismatch { expected: self.config.d, got: probe.len() });
        }
        Ok(())
    }
}

/// `L × d` embeddings with `N(0, 1/d)` entries, on a stream separate from
/// the weights.
pub fn sample_embeddings(config: &ToyModelConfig, seed: u64) -> Array2<f64> {
    gaussian(&mut rng(seed, EMBEDDING_STREAM), config.len, config.d, 1.0 / config.d as f64)
}

/// Fixed linear functional applied to the final hidden state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Probe {
    /// All-ones direction scaled to unit norm.
    #[default]
    Ones,
    /// Unit-norm Gaussian direction from the given seed.
    Random { seed: u64 },
    Custom { values: Vec<f64> },
}

impl Probe {
    pub fn vector(&self, d: usize) -> Result<Array1<f64>> {
        let v = match self {
            Probe::Ones => Array1::from_elem(d, 1.0),
            Probe::Random { seed } => {
                let mut r = rng(*seed, PROBE_STREAM);
                Array1::from_shape_simple_fn(d, || r.sample::<f64, _>(StandardNormal))
            }
            Probe::Custom { values } => {
                if values.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: values.len() });
                }
                return Ok(Array1::from(values.clone()));
            }
        };
        let n = v.dot(&v).sqrt();
        Ok(v / n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let c = ToyModelConfig { attention_mode: AttentionMode::SoftmaxRandom, ..Default::default() };
        let a = init_model(&c).unwrap();
        let b = init_model(&c).unwrap();
        assert_eq!(a.checksum(), b.checksum());
        assert_eq!(a, b);
        let other = init_model(&ToyModelConfig { seed: 1, ..c.clone() }).unwrap();
        assert_ne!(a.checksum(), other.checksum());
        let lin = init_model(&ToyModelConfig { attention_mode: AttentionMode::UniformLinear, ..c }).unwrap();
        assert_eq!(lin.layers[2].gain, a.layers[2].gain);
    }

    #[test]
    fn multi_head_composition() {
        let c = ToyModelConfig { heads: 2, d: 64, depth: 1, ..Default::default() };
        let m = init_model(&c).unwrap();
        let layer = &m.layers[0];
        assert_eq!(layer.heads.len(), 2);
        let mut sum = Array2::<f64>::zeros((64, 64));
        for h in &layer.heads {
            assert_eq!(h.w_v.as_ref().unwrap().dim(), (64, 32));
            assert_eq!(h.w_o.as_ref().unwrap().dim(), (32, 64));
            sum += &h.w_v.as_ref().unwrap().dot(h.w_o.as_ref().unwrap());
        }
        assert_eq!(sum, layer.gain);
    }

    #[test]
    fn variance_matches_kaiming() {
        let c = ToyModelConfig { d: 1024, depth: 1, d_k: 64, attention_mode: AttentionMode::SoftmaxRandom, ..Default::default() };
        let m = init_model(&c).unwrap();
        let head = &m.layers[0].heads[0];
        let var = |w: &Array2<f64>| w.iter().map(|x| x * x).sum::<f64>() / w.len() as f64;
        let v = var(head.w_v.as_ref().unwrap());
        assert!((v * 1024.0 - 1.0).abs() < 0.05, "{v}");
        let q = var(head.w_q.as_ref().unwrap());
        assert!((q * 64.0 - 1.0).abs() < 0.05, "{q}");
    }

    #[test]
    fn probes() {
        let p = Probe::Ones.vector(4).unwrap();
        assert!(p.iter().all(|&x| (x - 0.5).abs() < 1e-15));
        let r = Probe::Random { seed: 9 }.vector(8).unwrap();
        assert!((r.dot(&r) - 1.0).abs() < 1e-12);
        assert!(Probe::Custom { values: vec![1.0] }.vector(3).is_err());
    }
}
