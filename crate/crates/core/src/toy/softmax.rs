//! Causal softmax attention with random query/key projections.
//!
//! Each layer computes `h' = (1-α) h + α Σ_heads A^h h C^h` with
//! `A^h = softmax_causal(q̃ k̃ᵀ)`, `q̃_i = R_i W_Qᵀ h_i`, `k̃_j = R_j W_Kᵀ h_j`
//! and `R_p` the RoPE rotation at 0-based position `p` (identity when RoPE
//! is off).

use ndarray::{s, Array1, Array2, Axis};

use super::config::AttentionMode;
use super::linear::row_norms;
use super::model::{init_model, sample_embeddings, Head, ToyModel};
use super::rope::RopeTable;
use crate::error::{Error, Result};
use crate::profile::InfluenceProfile;

fn require_softmax(model: &ToyModel) -> Result<()> {
    if model.config.attention_mode != AttentionMode::SoftmaxRandom {
        return Err(Error::ModeMismatch("operation needs softmax-random attention".into()));
    }
    Ok(())
}

fn rope_table(model: &ToyModel) -> Result<Option<RopeTable>> {
    let c = &model.config;
    if c.rope_enabled {
        Ok(Some(RopeTable::new(c.d_k, c.len, c.rope_theta)?))
    } else {
        Ok(None)
    }
}

fn temperature(model: &ToyModel) -> f64 {
    if model.config.score_temperature {
        1.0 / (model.config.d_k as f64).sqrt()
    } else {
        1.0
    }
}

/// Row-wise softmax over `j ≤ i`; entries above the diagonal are zero.
pub fn causal_softmax(scores: &Array2<f64>) -> Array2<f64> {
    let n = scores.nrows();
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        let row = scores.slice(s![i, ..=i]);
        let top = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let mut total = 0.0;
        for j in 0..=i {
            let e = (row[j] - top).exp();
            a[[i, j]] = e;
            total += e;
        }
        a.slice_mut(s![i, ..=i]).mapv_inplace(|x| x / total);
    }
    a
}

fn rotate_rows(m: &mut Array2<f64>, rope: Option<&RopeTable>, inverse: bool) {
    if let Some(t) = rope {
        for (p, mut row) in m.axis_iter_mut(Axis(0)).enumerate() {
            t.rotate(row.as_slice_mut().expect("standard layout"), p, inverse);
        }
    }
}

/// Rotated queries, keys and the attention matrix of one head.
fn head_attention(head: &Head, h: &Array2<f64>, rope: Option<&RopeTable>, tau: f64) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let (w_q, w_k) = (head.w_q.as_ref().expect("softmax head"), head.w_k.as_ref().expect("softmax head"));
    let mut q = h.dot(w_q);
    let mut k = h.dot(w_k);
    rotate_rows(&mut q, rope, false);
    rotate_rows(&mut k, rope, false);
    let a = causal_softmax(&(q.dot(&k.t()) * tau));
    (a, q, k)
}

#[derive(Debug, Clone)]
pub struct HeadCache {
    pub attention: Array2<f64>,
    pub queries: Array2<f64>,
    pub keys: Array2<f64>,
    /// `h C^h`.
    pub values: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct LayerCache {
    pub input: Array2<f64>,
    pub heads: Vec<HeadCache>,
}

fn layer_forward(model: &ToyModel, layer: usize, h: &Array2<f64>, rope: Option<&RopeTable>) -> (Array2<f64>, LayerCache) {
    let alpha = model.config.alpha;
    let tau = temperature(model);
    let mut mixed = Array2::zeros(h.raw_dim());
    let heads = model.layers[layer]
        .heads
        .iter()
        .map(|head| {
            let (attention, queries, keys) = head_attention(head, h, rope, tau);
            let values = h.dot(&head.gain);
            mixed += &attention.dot(&values);
            HeadCache { attention, queries, keys, values }
        })
        .collect();
    let out = h * (1.0 - alpha) + mixed * alpha;
    (out, LayerCache { input: h.clone(), heads })
}

/// Output after all layers plus the per-layer caches used by backprop.
pub fn forward_softmax(model: &ToyModel, embeddings: &Array2<f64>) -> Result<(Array2<f64>, Vec<LayerCache>)> {
    require_softmax(model)?;
    model.check_embeddings(embeddings)?;
    let rope = rope_table(model)?;
    let mut h = embeddings.clone();
    let mut caches = Vec::with_capacity(model.layers.len());
    for l in 0..model.layers.len() {
        let (next, cache) = layer_forward(model, l, &h, rope.as_ref());
        caches.push(cache);
        h = next;
    }
    Ok((h, caches))
}

/// Attention branch of one layer with scores computed from `h_qk` and
/// values from `h_v`: `Σ_heads A(h_qk) h_v C^h` (no residual, no `α`).
pub fn attention_split(model: &ToyModel, layer: usize, h_qk: &Array2<f64>, h_v: &Array2<f64>) -> Result<Array2<f64>> {
    require_softmax(model)?;
    check_layer(model, layer)?;
    model.check_embeddings(h_qk)?;
    model.check_embeddings(h_v)?;
    let rope = rope_table(model)?;
    let tau = temperature(model);
    let mut out = Array2::zeros(h_v.raw_dim());
    for head in &model.layers[layer].heads {
        let (a, _, _) = head_attention(head, h_qk, rope.as_ref(), tau);
        out += &a.dot(&h_v.dot(&head.gain));
    }
    Ok(out)
}

fn check_layer(model: &ToyModel, layer: usize) -> Result<()> {
    if layer >= model.layers.len() {
        return Err(Error::Index(format!("layer {layer} out of range for depth {}", model.layers.len())));
    }
    Ok(())
}

/// `∂(uᵀ h_L^{(H)})/∂h^{(0)}` by reverse-mode differentiation through every
/// softmax.
pub fn gradients_softmax(model: &ToyModel, embeddings: &Array2<f64>, probe: &Array1<f64>) -> Result<Array2<f64>> {
    model.check_probe(probe)?;
    let (_, caches) = forward_softmax(model, embeddings)?;
    let rope = rope_table(model)?;
    let (len, alpha, tau) = (model.config.len, model.config.alpha, temperature(model));
    let mut g = Array2::zeros((len, model.config.d));
    g.row_mut(len - 1).assign(probe);
    for (layer, cache) in model.layers.iter().zip(&caches).rev() {
        let gz = &g * alpha;
        let mut dh = &g * (1.0 - alpha);
        for (head, hc) in layer.heads.iter().zip(&cache.heads) {
            let a = &hc.attention;
            dh += &a.t().dot(&gz).dot(&head.gain.t());
            let da = gz.dot(&hc.values.t());
            let mut ds = Array2::zeros((len, len));
            for i in 0..len {
                let mean: f64 = (0..=i).map(|m| a[[i, m]] * da[[i, m]]).sum();
                for k in 0..=i {
                    ds[[i, k]] = a[[i, k]] * (da[[i, k]] - mean) * tau;
                }
            }
            let mut dq = ds.dot(&hc.keys);
            let mut dk = ds.t().dot(&hc.queries);
            rotate_rows(&mut dq, rope.as_ref(), true);
            rotate_rows(&mut dk, rope.as_ref(), true);
            dh += &dq.dot(&head.w_q.as_ref().unwrap().t());
            dh += &dk.dot(&head.w_k.as_ref().unwrap().t());
        }
        g = dh;
    }
    Ok(g)
}

pub fn jacobian_profile_softmax(model: &ToyModel, embeddings: &Array2<f64>, probe: &Array1<f64>) -> Result<InfluenceProfile> {
    Ok(InfluenceProfile::new(row_norms(&gradients_softmax(model, embeddings, probe)?)))
}

/// Explicit `d × d` Jacobian blocks `∂h'_i/∂h_j` of one layer, split into
/// the value pathway `Σ_h A_ij C^h` and the score pathway
/// `Σ_h [δ_ij Σ_k (W_Q R_iᵀ k̃_k) ⊗ A_ik (y_k - ȳ_i) + (W_K R_jᵀ q̃_i) ⊗ A_ij (y_j - ȳ_i)]`.
/// Entry `(a, b)` of a block is `∂h'_{i,b}/∂h_{j,a}`; neither part carries
/// the factor `α`.
#[derive(Debug, Clone)]
pub struct LayerJacobian {
    pub len: usize,
    pub value: Vec<Array2<f64>>,
    pub score: Vec<Array2<f64>>,
    pub alpha: f64,
}

impl LayerJacobian {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.len + j
    }

    /// 0-based block accessors.
    pub fn value_block(&self, i: usize, j: usize) -> &Array2<f64> {
        &self.value[self.idx(i, j)]
    }

    pub fn score_block(&self, i: usize, j: usize) -> &Array2<f64> {
        &self.score[self.idx(i, j)]
    }

    /// `(1-α) δ_ij I + α (value + score)`.
    pub fn full_block(&self, i: usize, j: usize) -> Array2<f64> {
        let mut b = (self.value_block(i, j) + self.score_block(i, j)) * self.alpha;
        if i == j {
            b.diag_mut().mapv_inplace(|x| x + 1.0 - self.alpha);
        }
        b
    }
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let col = a.view().insert_axis(Axis(1));
    let row = b.view().insert_axis(Axis(0));
    col.dot(&row)
}

pub fn layer_jacobian(model: &ToyModel, layer: usize, input: &Array2<f64>) -> Result<LayerJacobian> {
    require_softmax(model)?;
    check_layer(model, layer)?;
    model.check_embeddings(input)?;
    let rope = rope_table(model)?;
    let (len, d, tau) = (model.config.len, model.config.d, temperature(model));
    let mut value = vec![Array2::zeros((d, d)); len * len];
    let mut score = vec![Array2::zeros((d, d)); len * len];
    let unrotate = |v: Array1<f64>, p: usize| {
        let mut v = v;
        if let Some(t) = rope.as_ref() {
            t.rotate(v.as_slice_mut().unwrap(), p, true);
        }
        v
    };
    for head in &model.layers[layer].heads {
        let (a, q, k) = head_attention(head, input, rope.as_ref(), tau);
        let y = input.dot(&head.gain);
        let (w_q, w_k) = (head.w_q.as_ref().unwrap(), head.w_k.as_ref().unwrap());
        for i in 0..len {
            let ybar = a.slice(s![i, ..=i]).dot(&y.slice(s![..=i, ..]));
            // Query-side term, only on the diagonal block.
            let mut diag = Array2::zeros((d, d));
            for kk in 0..=i {
                let dsdh = w_q.dot(&unrotate(k.row(kk).to_owned(), i)) * tau;
                let dy = (&y.row(kk) - &ybar) * a[[i, kk]];
                diag += &outer(&dsdh, &dy);
            }
            score[i * len + i] += &diag;
            let qi = q.row(i).to_owned();
            for j in 0..=i {
                value[i * len + j].scaled_add(a[[i, j]], &head.gain);
                let dsdh = w_k.dot(&unrotate(qi.clone(), j)) * tau;
                let dy = (&y.row(j) - &ybar) * a[[i, j]];
                score[i * len + j] += &outer(&dsdh, &dy);
            }
        }
    }
    Ok(LayerJacobian { len, value, score, alpha: model.config.alpha })
}

/// Same gradients as [`gradients_softmax`], but chained through explicit
/// per-layer Jacobian blocks: `g_j ← Σ_{i≥j} B_ij g_i`.
pub fn gradients_blocks(model: &ToyModel, embeddings: &Array2<f64>, probe: &Array1<f64>) -> Result<Array2<f64>> {
    model.check_probe(probe)?;
    let (_, caches) = forward_softmax(model, embeddings)?;
    let len = model.config.len;
    let mut g = Array2::zeros((len, model.config.d));
    g.row_mut(len - 1).assign(probe);
    for (l, cache) in caches.iter().enumerate().rev() {
        let jac = layer_jacobian(model, l, &cache.input)?;
        let mut prev = Array2::zeros(g.raw_dim());
        for j in 0..len {
            let mut acc = Array1::zeros(model.config.d);
            for i in j..len {
                acc += &jac.full_block(i, j).dot(&g.row(i));
            }
            prev.row_mut(j).assign(&acc);
        }
        g = prev;
    }
    Ok(g)
}

pub fn jacobian_profile_blocks(model: &ToyModel, embeddings: &Array2<f64>, probe: &Array1<f64>) -> Result<InfluenceProfile> {
    Ok(InfluenceProfile::new(row_norms(&gradients_blocks(model, embeddings, probe)?)))
}

/// Softmax row of query position `i` (1-based) in `layer` and `head`.
pub fn attention_row(model: &ToyModel, layer: usize, head: usize, i: usize, embeddings: &Array2<f64>) -> Result<Vec<f64>> {
    require_softmax(model)?;
    check_layer(model, layer)?;
    model.check_embeddings(embeddings)?;
    if i == 0 || i > model.config.len {
        return Err(Error::Index(format!("query position {i} outside 1..={}", model.config.len)));
    }
    if head >= model.config.heads {
        return Err(Error::Index(format!("head {head} out of range for {} heads", model.config.heads)));
    }
    let rope = rope_table(model)?;
    let mut h = embeddings.clone();
    for l in 0..layer {
        h = layer_forward(model, l, &h, rope.as_ref()).0;
    }
    let (a, _, _) = head_attention(&model.layers[layer].heads[head], &h, rope.as_ref(), temperature(model));
    Ok(a.slice(s![i - 1, ..i]).to_vec())
}

fn fro(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Mean over `j ≤ i` of `‖score_ij‖_F / ‖value_ij‖_F` for the first layer.
pub fn score_value_ratio_model(model: &ToyModel, embeddings: &Array2<f64>) -> Result<f64> {
    let jac = layer_jacobian(model, 0, embeddings)?;
    let len = model.config.len;
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..len {
        for j in 0..=i {
            total += fro(jac.score_block(i, j)) / fro(jac.value_block(i, j));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Score/value ratio over seeds `config.seed + k`; each seed also fixes
/// its embeddings.
pub fn score_value_ratio(config: &super::config::ToyModelConfig, n_seeds: usize) -> Result<(f64, Vec<f64>)> {
    if n_seeds == 0 {
        return Err(Error::InvalidParameter("need at least one seed".into()));
    }
    if config.attention_mode != AttentionMode::SoftmaxRandom {
        return Err(Error::ModeMismatch("score/value ratio needs softmax-random attention".into()));
    }
    if config.depth != 1 {
        return Err(Error::InvalidParameter(format!("score/value ratio is a single-layer measurement, got depth {}", config.depth)));
    }
    use rayon::prelude::*;
    let ratios = (0..n_seeds as u64)
        .into_par_iter()
        .map(|k| {
            let c = super::config::ToyModelConfig { seed: config.seed.wrapping_add(k), ..config.clone() };
            let model = init_model(&c)?;
            score_value_ratio_model(&model, &sample_embeddings(&c, c.seed))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok((mean, ratios))
}

/// Finite-difference version of the `(i, j)` score/value ratio
/// (0-based): the value block perturbs only the value input of
/// [`attention_split`], the score block only its query/key input.
pub fn score_value_ratio_fd(model: &ToyModel, embeddings: &Array2<f64>, i: usize, j: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let d = model.config.d;
    let block = |perturb_scores: bool| -> Result<Array2<f64>> {
        let mut b = Array2::zeros((d, d));
        for a in 0..d {
            let mut plus = embeddings.clone();
            let mut minus = embeddings.clone();
            plus[[j, a]] += eps;
            minus[[j, a]] -= eps;
            let (fp, fm) = if perturb_scores {
                (attention_split(model, 0, &plus, embeddings)?, attention_split(model, 0, &minus, embeddings)?)
            } else {
                (attention_split(model, 0, embeddings, &plus)?, attention_split(model, 0, embeddings, &minus)?)
            };
            let col = (&fp.row(i) - &fm.row(i)) / (2.0 * eps);
            b.row_mut(a).assign(&col);
        }
        Ok(b)
    };
    Ok(fro(&block(true)?) / fro(&block(false)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::config::ToyModelConfig;
    use crate::toy::model::Probe;

    fn cfg(len: usize, d: usize, depth: u32) -> ToyModelConfig {
        ToyModelConfig {
            len,
            d,
            depth,
            d_k: 8,
            attention_mode: AttentionMode::SoftmaxRandom,
            rope_enabled: true,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn softmax_rows() {
        let a = causal_softmax(&Array2::zeros((4, 4)));
        for i in 0..4 {
            for j in 0..4 {
                let want = if j <= i { 1.0 / (i + 1) as f64 } else { 0.0 };
                assert!((a[[i, j]] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn attention_row_examples() {
        let c = cfg(8, 8, 2);
        let m = init_model(&c).unwrap();
        let e = sample_embeddings(&c, 1);
        assert_eq!(attention_row(&m, 0, 0, 1, &e).unwrap(), vec![1.0]);
        let r = attention_row(&m, 1, 0, 8, &e).unwrap();
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(matches!(attention_row(&m, 0, 0, 9, &e), Err(Error::Index(_))));
        let z = m.clone().zero_query_key();
        for x in attention_row(&z, 1, 0, 5, &e).unwrap() {
            assert!((x - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn backprop_matches_blocks() {
        for heads in [1, 2] {
            let c = ToyModelConfig { heads, ..cfg(7, 6, 3) };
            let m = init_model(&c).unwrap();
            let e = sample_embeddings(&c, 2);
            let u = Probe::Random { seed: 4 }.vector(6).unwrap();
            let a = gradients_softmax(&m, &e, &u).unwrap();
            let b = gradients_blocks(&m, &e, &u).unwrap();
            let scale = a.iter().fold(0.0f64, |s, x| s.max(x.abs()));
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-12 * scale, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn zero_query_key_kills_score_path() {
        let c = ToyModelConfig { depth: 1, ..cfg(6, 8, 1) };
        let m = init_model(&c).unwrap().zero_query_key();
        assert_eq!(score_value_ratio_model(&m, &sample_embeddings(&c, 0)).unwrap(), 0.0);
    }

    #[test]
    fn ratio_matches_split_fd() {
        let c = ToyModelConfig { depth: 1, ..cfg(4, 8, 1) };
        let m = init_model(&c).unwrap();
        let e = sample_embeddings(&c, 3);
        let jac = layer_jacobian(&m, 0, &e).unwrap();
        let analytic = fro(jac.score_block(1, 0)) / fro(jac.value_block(1, 0));
        let fd = score_value_ratio_fd(&m, &e, 1, 0, 1e-5).unwrap();
        assert!((analytic - fd).abs() < 1e-5 * analytic, "{analytic} vs {fd}");
    }

    #[test]
    fn ratio_needs_seeds() {
        let c = ToyModelConfig { depth: 1, ..cfg(4, 8, 1) };
        assert!(matches!(score_value_ratio(&c, 0), Err(Error::InvalidParameter(_))));
    }
}
