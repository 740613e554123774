//! Discrete Cesàro and residual kernels and their powers, computed by
//! independent routes: exact rational multiplication, the closed-form
//! alternating sum, the Gamma-integral representation and O(L) float
//! application.

pub mod closed_form;
pub mod fast;
pub mod integral;
pub mod matrix;

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::decimal::{to_decimal_string, DEFAULT_SIGNIFICANT_DIGITS};
use crate::error::{Error, Result};
use crate::profile::InfluenceProfile;
use crate::quadrature::QuadratureConfig;

pub use closed_form::{
    binomial, closed_form_entry_m, closed_form_entry_n, closed_form_row_m, closed_form_row_n,
};
pub use fast::{apply_fast, apply_transpose_checked, apply_transpose_fast, last_row_float};
pub use integral::{integral_entry, IntegralEstimate};
pub use matrix::{build_cesaro, build_residual, parse_rational, Alpha, DiscreteKernel, Entries, StorageMode};

/// Route used to compute a kernel row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    FloatPower,
    ClosedForm,
    Integral,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Exact, Method::FloatPower, Method::ClosedForm, Method::Integral];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::FloatPower => "float-power",
            Method::ClosedForm => "closed-form",
            Method::Integral => "integral",
        }
    }

    fn is_rational(self) -> bool {
        matches!(self, Method::Exact | Method::ClosedForm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

/// Largest `L` each method accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub exact_max_len: usize,
    pub closed_form_max_len: usize,
    pub float_max_len: usize,
    pub integral_max_len: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            exact_max_len: 64,
            closed_form_max_len: 256,
            float_max_len: 1 << 16,
            integral_max_len: 1 << 16,
        }
    }
}

impl Limits {
    pub fn for_method(&self, m: Method) -> usize {
        match m {
            Method::Exact => self.exact_max_len,
            Method::ClosedForm => self.closed_form_max_len,
            Method::FloatPower => self.float_max_len,
            Method::Integral => self.integral_max_len,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowValues {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

/// Last row `(N^H)_{L, 1..=L}` together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    pub len: usize,
    pub power: u32,
    pub alpha: Alpha,
    /// Method actually used (a float alpha reroutes rational methods).
    pub method: Method,
    pub values: RowValues,
    /// Accumulated quadrature discrepancy for the integral method.
    pub error_estimate: f64,
}

impl KernelRow {
    pub fn mode(&self) -> StorageMode {
        match self.values {
            RowValues::Exact(_) => StorageMode::Exact,
            RowValues::Float(_) => StorageMode::Float,
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match &self.values {
            RowValues::Exact(v) => v.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect(),
            RowValues::Float(v) => v.clone(),
        }
    }

    pub fn profile(&self) -> InfluenceProfile {
        InfluenceProfile::new(self.to_f64())
    }

    /// Exact rationals as decimal strings with `digits` significant digits.
    pub fn decimal_strings(&self, digits: usize) -> Vec<String> {
        match &self.values {
            RowValues::Exact(v) => v.iter().map(|r| to_decimal_string(r, digits)).collect(),
            RowValues::Float(v) => v.iter().map(|x| format!("{x:e}")).collect(),
        }
    }

    /// `{"L", "H", "alpha", "mode", "method", "row_last"}`; exact rows also
    /// carry `row_last_exact` as `"p/q"` strings.
    pub fn to_json(&self, digits: usize) -> Value {
        let mut doc = json!({
            "L": self.len,
            "H": self.power,
            "alpha": self.alpha,
            "mode": self.mode(),
            "method": self.method,
        });
        match &self.values {
            RowValues::Exact(v) => {
                doc["row_last"] = json!(self.decimal_strings(digits));
                doc["row_last_exact"] =
                    json!(v.iter().map(|r| format!("{}/{}", r.numer(), r.denom())).collect::<Vec<_>>());
            }
            RowValues::Float(v) => {
                doc["row_last"] = json!(v);
            }
        }
        if self.method == Method::Integral {
            doc["error_estimate"] = json!(self.error_estimate);
        }
        doc
    }

    pub fn to_json_default(&self) -> Value {
        self.to_json(DEFAULT_SIGNIFICANT_DIGITS)
    }
}

/// `(N^H)_{L, j}` for `j = 1..=L` by the chosen method.
///
/// Rational methods with a float `alpha` fall back to `float-power` with a
/// warning. Exceeding a method's length limit is a tractability error.
pub fn last_row_profile(
    len: usize,
    h: u32,
    alpha: &Alpha,
    method: Method,
    limits: &Limits,
    quad: &QuadratureConfig,
) -> Result<KernelRow> {
    if len == 0 {
        return Err(Error::InvalidDimension("sequence length must be at least 1".into()));
    }
    alpha.validate()?;
    let method = if method.is_rational() && !alpha.is_exact() {
        log::warn!("alpha = {alpha} is not rational; {method} falls back to float-power");
        Method::FloatPower
    } else {
        method
    };
    let limit = limits.for_method(method);
    if len > limit {
        let suggestion = match method {
            Method::Exact | Method::ClosedForm => "use --method float-power".to_string(),
            _ => "reduce L".to_string(),
        };
        return Err(Error::Tractability { what: format!("method {method}"), requested: len, limit, suggestion });
    }
    let mut error_estimate = 0.0;
    let values = match method {
        Method::Exact => RowValues::Exact(last_row_exact(len, h, alpha.as_rational().unwrap())),
        Method::ClosedForm => RowValues::Exact(closed_form_row_n(len, h, alpha.as_rational().unwrap())?),
        Method::FloatPower => RowValues::Float(last_row_float(len, h, alpha.to_f64())),
        Method::Integral => {
            let (row, err) = last_row_integral(len, h, alpha.to_f64(), quad)?;
            error_estimate = err;
            RowValues::Float(row)
        }
    };
    Ok(KernelRow { len, power: h, alpha: alpha.clone(), method, values, error_estimate })
}

/// Exact last row of `N^H` by `H` rational applications of `Nᵀ` to the unit
/// vector at position `L`.
fn last_row_exact(len: usize, h: u32, alpha: &BigRational) -> Vec<BigRational> {
    let keep = BigRational::one() - alpha;
    let mut v = vec![BigRational::zero(); len];
    v[len - 1] = BigRational::one();
    for _ in 0..h {
        let mut acc = BigRational::zero();
        let mut next = vec![BigRational::zero(); len];
        for idx in (0..len).rev() {
            acc += &v[idx] / BigRational::from_integer((idx as i64 + 1).into());
            next[idx] = &keep * &v[idx] + alpha * &acc;
        }
        v = next;
    }
    v
}

/// Binomial mixture of integral-form `M^r` entries, accumulating the
/// weighted quadrature discrepancies.
fn last_row_integral(len: usize, h: u32, alpha: f64, quad: &QuadratureConfig) -> Result<(Vec<f64>, f64)> {
    let weights: Vec<f64> = (0..=h)
        .map(|r| {
            let b = binomial(h as u64, r as u64).to_f64().unwrap_or(f64::INFINITY);
            b * alpha.powi(r as i32) * (1.0 - alpha).powi((h - r) as i32)
        })
        .collect();
    let mut row = vec![0.0; len];
    let mut err = 0.0;
    row[len - 1] = weights[0];
    for (j, slot) in row.iter_mut().enumerate() {
        for r in 1..=h {
            let w = weights[r as usize];
            if w == 0.0 {
                continue;
            }
            let e = integral_entry(len, j + 1, r, quad)?;
            *slot += w * e.value;
            err += w * e.error_estimate;
        }
    }
    Ok((row, err))
}
