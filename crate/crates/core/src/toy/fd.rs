//! Central finite differences of `s = uᵀ h_L^{(H)}` with respect to every
//! embedding coordinate, used as an independent gradient oracle.

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use super::forward;
use super::linear::row_norms;
use super::model::ToyModel;
use crate::error::{Error, Result};
use crate::profile::InfluenceProfile;

fn scalar_output(model: &ToyModel, h: &Array2<f64>, probe: &Array1<f64>) -> Result<f64> {
    let out = forward(model, h)?;
    Ok(out.row(model.config.len - 1).dot(probe))
}

pub fn gradients_fd(model: &ToyModel, embeddings: &Array2<f64>, probe: &Array1<f64>, epsilon: f64) -> Result<Array2<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    model.check_embeddings(embeddings)?;
    model.check_probe(probe)?;
    let (len, d) = (model.config.len, model.config.d);
    let grads = (0..len * d)
        .into_par_iter()
        .map(|idx| {
            let (j, a) = (idx / d, idx % d);
            let mut plus = embeddings.clone();
            let mut minus = embeddings.clone();
            plus[[j, a]] += epsilon;
            minus[[j, a]] -= epsilon;
            Ok((scalar_output(model, &plus, probe)? - scalar_output(model, &minus, probe)?) / (2.0 * epsilon))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Array2::from_shape_vec((len, d), grads).expect("len * d gradients"))
}

/// Per-position norms of the finite-difference gradient.
pub fn jacobian_profile_fd(model: &ToyModel, embeddings: &Array2<f64>, probe: &Array1<f64>, epsilon: f64) -> Result<InfluenceProfile> {
    Ok(InfluenceProfile::new(row_norms(&gradients_fd(model, embeddings, probe, epsilon)?)))
}

/// `max_j |a_j - b_j| / max_j |b_j|`.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
