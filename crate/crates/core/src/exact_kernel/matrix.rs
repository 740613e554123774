use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Residual mixing weight. `Exact` keeps the rational value so kernels built
/// from it can stay in exact storage.
#[derive(Debug, Clone, PartialEq)]
pub enum Alpha {
    Exact(BigRational),
    Float(f64),
}

impl Alpha {
    pub fn one() -> Self {
        Alpha::Exact(BigRational::one())
    }

    pub fn ratio(numer: i64, denom: i64) -> Self {
        Alpha::Exact(BigRational::new(numer.into(), denom.into()))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Alpha::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Alpha::Float(x) => *x,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Alpha::Exact(r) => Some(r),
            Alpha::Float(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Alpha::Exact(_))
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Alpha::Exact(r) => !r.is_negative() && *r <= BigRational::one(),
            Alpha::Float(x) => (0.0..=1.0).contains(x),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("alpha = {self} must lie in [0, 1]")))
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Alpha::Float(x) => write!(f, "{x}"),
        }
    }
}

/// Parses `p/q`, an integer, or a plain decimal literal (`0.25`) as an exact
/// rational. Anything else that parses as a float (`1e-3`, `nan`) becomes
/// [`Alpha::Float`].
impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(r) = parse_rational(s) {
            return Ok(Alpha::Exact(r));
        }
        s.parse::<f64>()
            .map(Alpha::Float)
            .map_err(|_| Error::InvalidParameter(format!("cannot parse alpha from {s:?}")))
    }
}

impl Serialize for Alpha {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Alpha::Exact(_) => s.serialize_str(&self.to_string()),
            Alpha::Float(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Num(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Num(x) => Ok(Alpha::Float(x)),
        }
    }
}

/// Parses `p/q`, `n` or a decimal literal `a.b` into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let r = BigRational::new(numer, denom);
    Some(if neg { -r } else { r })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StorageMode {
    Exact,
    Float,
}

impl fmt::Display for StorageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StorageMode::Exact => "exact",
            StorageMode::Float => "float",
        })
    }
}

/// Lower-triangular storage: row `i` (0-based) holds columns `0..=i`.
#[derive(Debug, Clone, PartialEq)]
pub enum Entries {
    Exact(Vec<Vec<BigRational>>),
    Float(Vec<Vec<f64>>),
}

/// A lower-triangular row-stochastic matrix: the Cesàro averaging matrix
/// `M`, the residual matrix `N = (1-α)I + αM`, or one of their powers.
///
/// Row and column indices in the public accessors are 1-based, matching the
/// token positions they stand for.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    len: usize,
    power: u32,
    alpha: Alpha,
    entries: Entries,
}

impl DiscreteKernel {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn alpha(&self) -> &Alpha {
        &self.alpha
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn storage_mode(&self) -> StorageMode {
        match self.entries {
            Entries::Exact(_) => StorageMode::Exact,
            Entries::Float(_) => StorageMode::Float,
        }
    }

    /// Exact entry at 1-based `(i, j)`; zero above the diagonal.
    pub fn exact_entry(&self, i: usize, j: usize) -> Result<BigRational> {
        self.check_index(i, j)?;
        match &self.entries {
            Entries::Exact(rows) if j <= i => Ok(rows[i - 1][j - 1].clone()),
            Entries::Exact(_) => Ok(BigRational::zero()),
            Entries::Float(_) => Err(Error::ModeMismatch("kernel holds float entries".into())),
        }
    }

    /// Entry at 1-based `(i, j)` as a float, whatever the storage.
    pub fn entry_f64(&self, i: usize, j: usize) -> Result<f64> {
        self.check_index(i, j)?;
        if j > i {
            return Ok(0.0);
        }
        Ok(match &self.entries {
            Entries::Exact(rows) => rows[i - 1][j - 1].to_f64().unwrap_or(f64::NAN),
            Entries::Float(rows) => rows[i - 1][j - 1],
        })
    }

    fn check_index(&self, i: usize, j: usize) -> Result<()> {
        if i == 0 || j == 0 || i > self.len || j > self.len {
            return Err(Error::Index(format!("({i}, {j}) outside 1..={}", self.len)));
        }
        Ok(())
    }

    /// Last row (`i = L`) as floats.
    pub fn last_row_f64(&self) -> Vec<f64> {
        match &self.entries {
            Entries::Exact(rows) => rows[self.len - 1]
                .iter()
                .map(|r| r.to_f64().unwrap_or(f64::NAN))
                .collect(),
            Entries::Float(rows) => rows[self.len - 1].clone(),
        }
    }

    pub fn last_row_exact(&self) -> Result<Vec<BigRational>> {
        match &self.entries {
            Entries::Exact(rows) => Ok(rows[self.len - 1].clone()),
            Entries::Float(_) => Err(Error::ModeMismatch("kernel holds float entries".into())),
        }
    }

    /// Converts to float storage.
    pub fn to_float(&self) -> DiscreteKernel {
        let entries = match &self.entries {
            Entries::Exact(rows) => Entries::Float(
                rows.iter()
                    .map(|row| row.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect())
                    .collect(),
            ),
            Entries::Float(rows) => Entries::Float(rows.clone()),
        };
        DiscreteKernel { len: self.len, power: self.power, alpha: self.alpha.clone(), entries }
    }

    /// `kernel^h` by repeated exact multiplication with the base kernel.
    ///
    /// The receiver is treated as the base (whatever power it already
    /// carries); the result records `power * h`.
    pub fn matrix_power_exact(&self, h: u32) -> Result<DiscreteKernel> {
        let Entries::Exact(base) = &self.entries else {
            return Err(Error::ModeMismatch(
                "matrix_power_exact requires exact storage".into(),
            ));
        };
        let mut acc = exact_identity(self.len);
        for _ in 0..h {
            acc = mul_lower_exact(&acc, base);
        }
        Ok(DiscreteKernel {
            len: self.len,
            power: self.power * h,
            alpha: self.alpha.clone(),
            entries: Entries::Exact(acc),
        })
    }

    /// Dense float power by repeated multiplication. Stable because every
    /// factor is non-negative and row-stochastic. O(h·L³/6).
    pub fn matrix_power_float(&self, h: u32) -> DiscreteKernel {
        let base = match self.to_float().entries {
            Entries::Float(rows) => rows,
            Entries::Exact(_) => unreachable!(),
        };
        let mut acc: Vec<Vec<f64>> = (0..self.len)
            .map(|i| (0..=i).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        for _ in 0..h {
            acc = mul_lower_f64(&acc, &base);
        }
        DiscreteKernel {
            len: self.len,
            power: self.power * h,
            alpha: self.alpha.clone(),
            entries: Entries::Float(acc),
        }
    }

    /// Largest deviation of a row sum from one (zero means exactly
    /// stochastic in exact mode).
    pub fn max_row_sum_error(&self) -> f64 {
        match &self.entries {
            Entries::Exact(rows) => rows
                .iter()
                .map(|row| {
                    let s: BigRational = row.iter().sum();
                    (s - BigRational::one()).to_f64().unwrap_or(f64::NAN).abs()
                })
                .fold(0.0, f64::max),
            Entries::Float(rows) => rows
                .iter()
                .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
                .fold(0.0, f64::max),
        }
    }

    pub fn is_exactly_stochastic(&self) -> bool {
        match &self.entries {
            Entries::Exact(rows) => rows
                .iter()
                .all(|row| row.iter().sum::<BigRational>() == BigRational::one()),
            Entries::Float(_) => false,
        }
    }

    pub fn has_negative_entry(&self) -> bool {
        match &self.entries {
            Entries::Exact(rows) => rows.iter().flatten().any(|r| *r < BigRational::zero()),
            Entries::Float(rows) => rows.iter().flatten().any(|x| *x < 0.0),
        }
    }
}

fn exact_identity(len: usize) -> Vec<Vec<BigRational>> {
    (0..len)
        .map(|i| {
            (0..=i)
                .map(|j| if i == j { BigRational::one() } else { BigRational::zero() })
                .collect()
        })
        .collect()
}

/// Product of two lower-triangular matrices in triangular storage:
/// `(AB)_{ij} = Σ_{k=j}^{i} A_{ik} B_{kj}`.
fn mul_lower_exact(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..=i)
                .map(|j| {
                    let mut s = BigRational::zero();
                    for k in j..=i {
                        if a[i][k].is_zero() || b[k][j].is_zero() {
                            continue;
                        }
                        s += &a[i][k] * &b[k][j];
                    }
                    s
                })
                .collect()
        })
        .collect()
}

fn mul_lower_f64(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..=i).map(|j| (j..=i).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

/// Cesàro averaging matrix `M_{ij} = 1/i` for `j ≤ i`, in exact storage.
pub fn build_cesaro(len: usize) -> Result<DiscreteKernel> {
    if len == 0 {
        return Err(Error::InvalidDimension("sequence length must be at least 1".into()));
    }
    let rows = (1..=len)
        .map(|i| {
            let w = BigRational::new(BigInt::one(), BigInt::from(i));
            vec![w; i]
        })
        .collect();
    Ok(DiscreteKernel { len, power: 1, alpha: Alpha::one(), entries: Entries::Exact(rows) })
}

/// Residual matrix `N = (1-α)I + αM`.
///
/// An exact `alpha` yields exact storage; a float `alpha` yields float
/// storage.
pub fn build_residual(len: usize, alpha: &Alpha) -> Result<DiscreteKernel> {
    if len == 0 {
        return Err(Error::InvalidDimension("sequence length must be at least 1".into()));
    }
    alpha.validate()?;
    let entries = match alpha {
        Alpha::Exact(a) => {
            let keep = BigRational::one() - a;
            Entries::Exact(
                (1..=len)
                    .map(|i| {
                        let off = a / BigRational::from_integer(BigInt::from(i));
                        let mut row = vec![off.clone(); i];
                        row[i - 1] = &keep + &off;
                        row
                    })
                    .collect(),
            )
        }
        Alpha::Float(a) => Entries::Float(
            (1..=len)
                .map(|i| {
                    let off = a / i as f64;
                    let mut row = vec![off; i];
                    row[i - 1] = (1.0 - a) + off;
                    row
                })
                .collect(),
        ),
    };
    Ok(DiscreteKernel { len, power: 1, alpha: alpha.clone(), entries })
}
