//! Continuous-limit influence densities and kernels.
//!
//! Pure causal stacks give `ρ_H(x) = (ln 1/x)^{H-1} / (H-1)!` on `(0, 1]`.
//! Residual stacks add a Dirac mass `(1-α)^H` at `x = 1`, which is always
//! carried as a separate scalar and never folded into a grid bin.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::decimal::format_f64;
use crate::error::{Error, Result};
use crate::exact_kernel::last_row_float;
use crate::quadrature::{converge, laguerre_integrate, legendre_integrate, QuadratureConfig};

/// Above this depth densities are evaluated in log space.
const LOG_SPACE_DEPTH: u32 = 20;

/// Default floor for log-scale exports.
pub const DEFAULT_LOG_FLOOR: f64 = 1e-300;

fn check_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {x} must lie in (0, 1]")))
    }
}

fn check_depth(h: u32) -> Result<()> {
    if h == 0 {
        Err(Error::InvalidParameter("depth must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in [0, 1]")))
    }
}

/// `ℓ^{n-1} / (n-1)!` for `ℓ ≥ 0`, switching to log space for deep stacks.
fn log_power_over_factorial(ell: f64, n: u32) -> f64 {
    if n == 1 {
        return 1.0;
    }
    if ell == 0.0 {
        return 0.0;
    }
    if n > LOG_SPACE_DEPTH {
        return ((n - 1) as f64 * ell.ln() - ln_gamma(n as f64)).exp();
    }
    let mut v = 1.0;
    for k in 1..n {
        v *= ell / k as f64;
    }
    v
}

/// `ρ_H(x) = (ln 1/x)^{H-1} / (H-1)!`.
pub fn causal_density(x: f64, h: u32) -> Result<f64> {
    check_unit("x", x)?;
    check_depth(h)?;
    Ok(log_power_over_factorial(-x.ln(), h))
}

/// `binom(H, r) α^r (1-α)^{H-r}`.
fn mixture_weight(h: u32, r: u32, alpha: f64) -> f64 {
    binomial_f64(h, r) * alpha.powi(r as i32) * (1.0 - alpha).powi((h - r) as i32)
}

fn binomial_f64(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

/// Continuous part `Σ_{r=1}^{H} binom(H,r) α^r (1-α)^{H-r} ρ_r(x)`.
pub fn residual_density(x: f64, h: u32, alpha: f64) -> Result<f64> {
    check_unit("x", x)?;
    check_depth(h)?;
    check_alpha(alpha)?;
    let ell = -x.ln();
    Ok((1..=h).map(|r| mixture_weight(h, r, alpha) * log_power_over_factorial(ell, r)).sum())
}

/// Residual-stack density: continuous part plus a point mass at `x = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousProfile {
    pub depth: u32,
    pub alpha: f64,
    pub point_mass_at_one: f64,
}

impl ContinuousProfile {
    pub fn new(depth: u32, alpha: f64) -> Result<Self> {
        check_depth(depth)?;
        check_alpha(alpha)?;
        let point_mass_at_one = (1.0 - alpha).powi(depth as i32);
        Ok(ContinuousProfile { depth, alpha, point_mass_at_one })
    }

    /// Pure causal stack (`α = 1`, no point mass).
    pub fn causal(depth: u32) -> Result<Self> {
        Self::new(depth, 1.0)
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        residual_density(x, self.depth, self.alpha)
    }

    /// `∫_0^1 density` computed on `x = e^{-t}`, where the integrand becomes
    /// `e^{-t}` times a polynomial in `t`.
    pub fn continuous_mass(&self, quad: &QuadratureConfig) -> Result<f64> {
        let (h, alpha) = (self.depth, self.alpha);
        let g = move |t: f64| {
            (1..=h).map(|r| mixture_weight(h, r, alpha) * log_power_over_factorial(t, r)).sum::<f64>()
        };
        let mut failure = None;
        let est = converge(quad.nodes, quad.max_nodes, quad.tolerance, |n| {
            laguerre_integrate(n, 0.0, g).unwrap_or_else(|e| {
                failure = Some(e);
                f64::NAN
            })
        });
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(est?.value)
    }

    pub fn total_mass(&self, quad: &QuadratureConfig) -> Result<f64> {
        Ok(self.continuous_mass(quad)? + self.point_mass_at_one)
    }

    /// `point_mass / continuous(x)`: how strongly the recency anchor
    /// dominates the interior at `x`.
    pub fn anchor_to_interior_ratio(&self, x: f64) -> Result<f64> {
        Ok(self.point_mass_at_one / self.density(x)?)
    }
}

/// `K_n(y, x)` sampled at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    pub n: u32,
    pub y: f64,
    pub x: f64,
    pub value: f64,
}

/// `K_n(y, x) = (1/y) (ln(y/x))^{n-1} / (n-1)! · Θ(y - x)`.
pub fn kernel_k(n: u32, y: f64, x: f64) -> Result<KernelPoint> {
    check_unit("y", y)?;
    check_unit("x", x)?;
    check_depth(n)?;
    let value = if x > y { 0.0 } else { log_power_over_factorial(y.ln() - x.ln(), n) / y };
    Ok(KernelPoint { n, y, x, value })
}

/// Residual kernel split into its continuous part and the weight of
/// `δ(y - x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualKernelPoint {
    pub continuous: f64,
    pub point_mass: f64,
}

/// `Σ_{k=0}^{n} binom(n,k) α^k (1-α)^{n-k} K_k` with `K_0 = δ`.
pub fn residual_kernel(n: u32, y: f64, x: f64, alpha: f64) -> Result<ResidualKernelPoint> {
    check_alpha(alpha)?;
    let mut continuous = 0.0;
    for k in 1..=n {
        continuous += mixture_weight(n, k, alpha) * kernel_k(k, y, x)?.value;
    }
    if n == 0 {
        check_unit("y", y)?;
        check_unit("x", x)?;
    }
    Ok(ResidualKernelPoint { continuous, point_mass: mixture_weight(n, 0, alpha) })
}

/// Numeric `∫_x^y K_m(y,z) K_n(z,x) dz` next to the closed form
/// `K_{m+n}(y,x)`.
pub fn convolution_check(m: u32, n: u32, y: f64, x: f64, quad: &QuadratureConfig) -> Result<(f64, f64)> {
    let target = kernel_k(m + n, y, x)?.value;
    check_depth(m)?;
    if x >= y {
        return Ok((0.0, target));
    }
    let f = |z: f64| match (kernel_k(m, y, z), kernel_k(n, z, x)) {
        (Ok(a), Ok(b)) => a.value * b.value,
        _ => 0.0,
    };
    let mut failure = None;
    let start = quad.nodes.min(16);
    let est = converge(start, quad.max_nodes.max(start * 2), quad.tolerance, |k| {
        legendre_integrate(k, x, y, f).unwrap_or_else(|e| {
            failure = Some(e);
            f64::NAN
        })
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((est?.value, target))
}

/// One record of a density grid export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub x: f64,
    pub density: f64,
    pub is_point_mass: bool,
    pub point_mass_weight: f64,
}

/// `x_j = j / n` for `j = 1..=n`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|j| j as f64 / n as f64).collect()
}

/// Continuous density on `grid`, followed by one point-mass record at
/// `x = 1` when its weight is positive.
pub fn density_grid(profile: &ContinuousProfile, grid: &[f64]) -> Result<Vec<GridRow>> {
    let mut rows = grid
        .iter()
        .map(|&x| {
            Ok(GridRow { x, density: profile.density(x)?, is_point_mass: false, point_mass_weight: 0.0 })
        })
        .collect::<Result<Vec<_>>>()?;
    if profile.point_mass_at_one > 0.0 {
        rows.push(GridRow {
            x: 1.0,
            density: 0.0,
            is_point_mass: true,
            point_mass_weight: profile.point_mass_at_one,
        });
    }
    Ok(rows)
}

/// Writes `x,density,is_point_mass,point_mass_weight`; with a log floor,
/// adds `log10_density` (clamped at the floor) and a `clamped` flag.
pub fn write_density_csv<W: Write>(out: W, rows: &[GridRow], log_floor: Option<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::Config(format!("CSV write failed: {e}"));
    let mut header = vec!["x", "density", "is_point_mass", "point_mass_weight"];
    if log_floor.is_some() {
        header.extend(["log10_density", "clamped"]);
    }
    w.write_record(&header).map_err(io)?;
    for r in rows {
        let mut rec = vec![
            format_f64(r.x),
            format_f64(r.density),
            u8::from(r.is_point_mass).to_string(),
            format_f64(r.point_mass_weight),
        ];
        if let Some(floor) = log_floor {
            let v = if r.is_point_mass { r.point_mass_weight } else { r.density };
            rec.push(format_f64(v.max(floor).log10()));
            rec.push(u8::from(v < floor).to_string());
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(format!("CSV write failed: {e}")))?;
    Ok(())
}

/// Column index `⌈xL⌉` (1-based) sampled by the discrete kernel at `x`.
pub fn grid_index(x: f64, len: usize) -> usize {
    let k = (x * len as f64 - 1e-9).ceil() as usize;
    k.clamp(1, len)
}

/// `|L·(M^H)_{L,⌈xL⌉} - ρ_H(x)|`.
pub fn discretization_error(len: usize, h: u32, x: f64) -> Result<f64> {
    let row = last_row_float(len, h, 1.0);
    let j = grid_index(x, len);
    Ok((len as f64 * row[j - 1] - causal_density(x, h)?).abs())
}

/// As [`discretization_error`] but comparing against the density at the
/// sampled grid point `⌈xL⌉/L` rather than at `x`.
pub fn discretization_error_aligned(len: usize, h: u32, x: f64) -> Result<f64> {
    let row = last_row_float(len, h, 1.0);
    let j = grid_index(x, len);
    Ok((len as f64 * row[j - 1] - causal_density(j as f64 / len as f64, h)?).abs())
}
