//! Quadrature configuration and node-doubling drivers.
//!
//! Node generation comes from `gauss-quad` (Golub–Welsch); rules are cached
//! per `(degree, alpha)` because the convergence loops rebuild the same
//! few rules thousands of times.

use std::collections::HashMap;
use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::laguerre::GaussLaguerre;
use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quadrature family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadRule {
    /// Gauss–Laguerre for short rows, the windowed rule for long ones.
    Auto,
    /// Generalized Gauss–Laguerre on `[0, ∞)`.
    GaussLaguerre,
    /// Composite Gauss–Legendre over a window around the peak of a
    /// log-concave integrand on `[0, ∞)`.
    WindowedLegendre,
    /// Plain Gauss–Legendre on a finite interval.
    GaussLegendre,
}

impl fmt::Display for QuadRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuadRule::Auto => "auto",
            QuadRule::GaussLaguerre => "gauss-laguerre",
            QuadRule::WindowedLegendre => "windowed-legendre",
            QuadRule::GaussLegendre => "gauss-legendre",
        })
    }
}

impl FromStr for QuadRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(QuadRule::Auto),
            "gauss-laguerre" | "laguerre" => Ok(QuadRule::GaussLaguerre),
            "windowed-legendre" | "windowed" => Ok(QuadRule::WindowedLegendre),
            "gauss-legendre" | "legendre" => Ok(QuadRule::GaussLegendre),
            other => Err(Error::InvalidParameter(format!("unknown quadrature rule {other:?}"))),
        }
    }
}

/// Which form of an integral to evaluate: the semi-infinite `t` form or the
/// unit-interval `u = e^{-t}` form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainTransform {
    T,
    U,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rule: QuadRule,
    /// Starting node count; doubled until two successive estimates agree.
    pub nodes: usize,
    pub domain_transform: DomainTransform,
    /// Agreement required between successive node counts, relative to
    /// `max(1, |estimate|)`.
    pub tolerance: f64,
    /// Node count at which doubling gives up.
    pub max_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rule: QuadRule::Auto,
            nodes: 64,
            domain_transform: DomainTransform::T,
            tolerance: 1e-10,
            max_nodes: 512,
        }
    }
}

impl QuadratureConfig {
    pub fn windowed() -> Self {
        QuadratureConfig { rule: QuadRule::WindowedLegendre, nodes: 32, max_nodes: 4096, ..Default::default() }
    }

    pub fn legendre() -> Self {
        QuadratureConfig {
            rule: QuadRule::GaussLegendre,
            nodes: 32,
            domain_transform: DomainTransform::U,
            max_nodes: 1024,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::InvalidParameter("quadrature needs at least one node".into()));
        }
        if self.max_nodes < self.nodes {
            return Err(Error::InvalidParameter("max_nodes is below the starting node count".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("quadrature tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Result of a converged quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Difference between the last two node counts.
    pub discrepancy: f64,
    pub nodes: usize,
}

/// Evaluates `eval(n)` at `n, 2n, 4n, …` until two successive values agree
/// within `tol · max(1, |value|)`.
pub fn converge<F>(start: usize, max: usize, tol: f64, mut eval: F) -> Result<Estimate>
where
    F: FnMut(usize) -> f64,
{
    let mut n = start.max(1);
    let mut prev = eval(n);
    loop {
        let next_n = n * 2;
        if next_n > max {
            let discrepancy = f64::INFINITY;
            return Err(Error::Accuracy { estimate: prev, discrepancy, tolerance: tol });
        }
        let next = eval(next_n);
        let discrepancy = (next - prev).abs();
        if discrepancy <= tol * next.abs().max(1.0) {
            return Ok(Estimate { value: next, discrepancy, nodes: next_n });
        }
        if next_n * 2 > max {
            return Err(Error::Accuracy { estimate: next, discrepancy, tolerance: tol });
        }
        n = next_n;
        prev = next;
    }
}

type LaguerreCache = Mutex<HashMap<(usize, u64), Arc<GaussLaguerre>>>;
type LegendreCache = Mutex<HashMap<usize, Arc<GaussLegendre>>>;

fn laguerre_cache() -> &'static LaguerreCache {
    static CACHE: OnceLock<LaguerreCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn legendre_cache() -> &'static LegendreCache {
    static CACHE: OnceLock<LegendreCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Generalized Gauss–Laguerre rule for weight `x^alpha e^{-x}`.
pub fn laguerre_rule(n: usize, alpha: f64) -> Result<Arc<GaussLaguerre>> {
    let key = (n, alpha.to_bits());
    if let Some(rule) = laguerre_cache().lock().unwrap().get(&key) {
        return Ok(rule.clone());
    }
    let degree = NonZeroUsize::new(n)
        .ok_or_else(|| Error::InvalidParameter("quadrature needs at least one node".into()))?;
    let a = alpha
        .try_into()
        .map_err(|_| Error::InvalidParameter(format!("Laguerre exponent {alpha} must exceed -1")))?;
    let rule = Arc::new(GaussLaguerre::new(degree, a));
    laguerre_cache().lock().unwrap().insert(key, rule.clone());
    Ok(rule)
}

pub fn legendre_rule(n: usize) -> Result<Arc<GaussLegendre>> {
    if let Some(rule) = legendre_cache().lock().unwrap().get(&n) {
        return Ok(rule.clone());
    }
    let degree = NonZeroUsize::new(n)
        .ok_or_else(|| Error::InvalidParameter("quadrature needs at least one node".into()))?;
    let rule = Arc::new(GaussLegendre::new(degree));
    legendre_cache().lock().unwrap().insert(n, rule.clone());
    Ok(rule)
}

/// `∫_0^∞ x^alpha e^{-x} f(x) dx` with an `n`-node rule.
pub fn laguerre_integrate<F: Fn(f64) -> f64>(n: usize, alpha: f64, f: F) -> Result<f64> {
    Ok(laguerre_rule(n, alpha)?.integrate(f))
}

/// `∫_a^b f` with an `n`-node Gauss–Legendre rule.
pub fn legendre_integrate<F: Fn(f64) -> f64>(n: usize, a: f64, b: f64, f: F) -> Result<f64> {
    Ok(legendre_rule(n)?.integrate(a, b, f))
}

/// `∫_a^b f` over `panels` equal panels with a fixed 16-node rule each.
pub fn composite_legendre<F: Fn(f64) -> f64>(panels: usize, a: f64, b: f64, f: F) -> Result<f64> {
    let rule = legendre_rule(16)?;
    let width = (b - a) / panels as f64;
    Ok((0..panels)
        .map(|p| {
            let lo = a + p as f64 * width;
            rule.integrate(lo, lo + width, &f)
        })
        .sum())
}

/// Integrates `exp(phi(t))` over `[0, ∞)` for a concave `phi` whose
/// derivative is `dphi`. The window is cut where `phi` has dropped by 60
/// below its maximum (a relative truncation of about `1e-26`).
pub fn windowed_log_concave<P, D>(phi: P, dphi: D, cfg: &QuadratureConfig) -> Result<Estimate>
where
    P: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    const DROP: f64 = 60.0;
    // Peak: dphi is decreasing; dphi(0+) may be +inf.
    let tiny = 1e-300;
    let peak = if dphi(tiny) <= 0.0 {
        0.0
    } else {
        let mut hi = 1.0;
        while dphi(hi) > 0.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::Domain("integrand has no finite peak".into()));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if dphi(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let top = phi(peak.max(tiny));
    if top == f64::NEG_INFINITY {
        return Ok(Estimate { value: 0.0, discrepancy: 0.0, nodes: 0 });
    }
    let floor = top - DROP;
    let left = if peak == 0.0 || phi(tiny) > floor {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0, peak);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) > floor {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    };
    let right = {
        let mut step = peak.max(1.0);
        while phi(peak + step) > floor {
            step *= 2.0;
        }
        let (mut lo, mut hi) = (peak, peak + step);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) > floor {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let f = |t: f64| if t <= 0.0 { 0.0 } else { phi(t).exp() };
    let start_panels = (cfg.nodes / 16).max(1);
    let max_panels = (cfg.max_nodes / 16).max(start_panels);
    let mut failure = None;
    let est = converge(start_panels, max_panels, cfg.tolerance, |p| {
        composite_legendre(p, left, right, f).unwrap_or_else(|e| {
            failure = Some(e);
            f64::NAN
        })
    });
    if let Some(e) = failure {
        return Err(e);
    }
    est.map(|e| Estimate { nodes: e.nodes * 16, ..e })
}
