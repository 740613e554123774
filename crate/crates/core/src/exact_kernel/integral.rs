//! Gamma-integral representation of `(M^H)_{i,j}`:
//!
//! `binom(i-1, j-1)/(H-1)! ∫_0^∞ t^{H-1} e^{-jt} (1-e^{-t})^{i-j} dt`
//!
//! or, with `u = e^{-t}`, the unit-interval form
//! `binom(i-1, j-1)/(H-1)! ∫_0^1 (-ln u)^{H-1} u^{j-1} (1-u)^{i-j} du`.

use statrs::function::factorial::ln_binomial;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::{
    converge, laguerre_integrate, legendre_integrate, windowed_log_concave, DomainTransform,
    Estimate, QuadRule, QuadratureConfig,
};

/// Quadrature value plus the last node-doubling discrepancy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralEstimate {
    pub value: f64,
    pub error_estimate: f64,
    pub nodes: usize,
}

impl From<Estimate> for IntegralEstimate {
    fn from(e: Estimate) -> Self {
        IntegralEstimate { value: e.value, error_estimate: e.discrepancy, nodes: e.nodes }
    }
}

/// Row index up to which the auto rule uses Gauss–Laguerre; beyond it the
/// integrand's mass sits far from the Laguerre weight and the windowed rule
/// takes over.
pub const AUTO_LAGUERRE_MAX_ROW: usize = 128;

/// `k · x` with `0 · (±∞) = 0`, for exponents that may vanish.
fn scaled(k: f64, x: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * x
    }
}

fn ln_prefactor(i: usize, j: usize, h: u32) -> f64 {
    ln_binomial((i - 1) as u64, (j - 1) as u64) - ln_gamma(h as f64)
}

/// `(M^H)_{i,j}` by quadrature. Above the diagonal the entry is exactly 0;
/// `H = 0` gives the Kronecker delta.
pub fn integral_entry(i: usize, j: usize, h: u32, quad: &QuadratureConfig) -> Result<IntegralEstimate> {
    if i == 0 || j == 0 {
        return Err(Error::InvalidDimension(format!(
            "positions are 1-based, got (i, j) = ({i}, {j})"
        )));
    }
    quad.validate()?;
    if j > i {
        return Ok(IntegralEstimate { value: 0.0, error_estimate: 0.0, nodes: 0 });
    }
    if h == 0 {
        let value = if i == j { 1.0 } else { 0.0 };
        return Ok(IntegralEstimate { value, error_estimate: 0.0, nodes: 0 });
    }
    let rule = match quad.rule {
        QuadRule::Auto if i <= AUTO_LAGUERRE_MAX_ROW => QuadRule::GaussLaguerre,
        QuadRule::Auto => QuadRule::WindowedLegendre,
        r => r,
    };
    match (rule, quad.domain_transform) {
        (QuadRule::GaussLaguerre, DomainTransform::T) => laguerre_t(i, j, h, quad),
        (QuadRule::WindowedLegendre, DomainTransform::T) => windowed_t(i, j, h, quad),
        (QuadRule::GaussLegendre, DomainTransform::U) => legendre_u(i, j, h, quad),
        (r, d) => Err(Error::InvalidParameter(format!(
            "quadrature rule {r} does not apply to the {d:?} domain"
        ))),
    }
}

/// With `s = j t` the integral becomes
/// `j^{-H} ∫ s^{H-1} e^{-s} (1 - e^{-s/j})^{i-j} ds`, a generalized
/// Laguerre weight with exponent `H-1` times a bounded smooth factor.
fn laguerre_t(i: usize, j: usize, h: u32, quad: &QuadratureConfig) -> Result<IntegralEstimate> {
    let ln_c = ln_prefactor(i, j, h) - h as f64 * (j as f64).ln();
    let span = (i - j) as f64;
    let jf = j as f64;
    let f = move |s: f64| (ln_c + scaled(span, (-(-s / jf).exp_m1()).ln())).exp();
    let exponent = (h - 1) as f64;
    let mut failure = None;
    let est = converge(quad.nodes, quad.max_nodes, quad.tolerance, |n| {
        laguerre_integrate(n, exponent, f).unwrap_or_else(|e| {
            failure = Some(e);
            f64::NAN
        })
    });
    if let Some(e) = failure {
        return Err(e);
    }
    est.map(Into::into)
}

/// `exp(φ(t))` with `φ(t) = ln c + (H-1) ln t - j t + (i-j) ln(1-e^{-t})`
/// is log-concave, so a window around its peak captures all the mass.
fn windowed_t(i: usize, j: usize, h: u32, quad: &QuadratureConfig) -> Result<IntegralEstimate> {
    let ln_c = ln_prefactor(i, j, h);
    let (a, jf, span) = ((h - 1) as f64, j as f64, (i - j) as f64);
    let phi = move |t: f64| ln_c + scaled(a, t.ln()) - jf * t + scaled(span, (-(-t).exp_m1()).ln());
    let dphi = move |t: f64| a / t - jf + span / t.exp_m1();
    windowed_log_concave(phi, dphi, quad).map(Into::into)
}

fn legendre_u(i: usize, j: usize, h: u32, quad: &QuadratureConfig) -> Result<IntegralEstimate> {
    let ln_c = ln_prefactor(i, j, h);
    let (a, b, span) = ((h - 1) as f64, (j - 1) as f64, (i - j) as f64);
    let f = move |u: f64| {
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        let ln_u = u.ln();
        (ln_c + scaled(a, (-ln_u).ln()) + scaled(b, ln_u) + scaled(span, (-u).ln_1p())).exp()
    };
    let mut failure = None;
    let est = converge(quad.nodes, quad.max_nodes, quad.tolerance, |n| {
        legendre_integrate(n, 0.0, 1.0, f).unwrap_or_else(|e| {
            failure = Some(e);
            f64::NAN
        })
    });
    if let Some(e) = failure {
        return Err(e);
    }
    est.map(Into::into)
}
