//! Decimal rendering of exact rationals to a fixed number of significant
//! digits (round half away from zero, trailing zeros trimmed).

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

pub const DEFAULT_SIGNIFICANT_DIGITS: usize = 40;

fn pow10(e: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), e as usize)
}

/// `10^e` as a rational, for any sign of `e`.
fn pow10_rational(e: i64) -> BigRational {
    if e >= 0 {
        BigRational::from_integer(pow10(e as u32))
    } else {
        BigRational::new(BigInt::from(1), pow10((-e) as u32))
    }
}

/// Renders `r` with `digits` significant digits. Plain notation is used for
/// decimal exponents in `[-6, digits)`, scientific (`1.25e-9`) otherwise.
pub fn to_decimal_string(r: &BigRational, digits: usize) -> String {
    let digits = digits.max(1);
    if r.is_zero() {
        return "0".to_string();
    }
    let neg = r.is_negative();
    let a = r.abs();
    // Decimal exponent e with 10^e <= a < 10^{e+1}.
    let mut e = a.numer().to_string().len() as i64 - a.denom().to_string().len() as i64;
    while pow10_rational(e) > a {
        e -= 1;
    }
    while pow10_rational(e + 1) <= a {
        e += 1;
    }
    // Integer mantissa with `digits` digits, rounded half up.
    let shift = digits as i64 - 1 - e;
    let scaled = &a * pow10_rational(shift);
    let (q, rem) = scaled.numer().div_rem(scaled.denom());
    let mut mantissa = if rem * 2 >= *scaled.denom() { q + 1 } else { q };
    if mantissa == pow10(digits as u32) {
        mantissa /= 10;
        e += 1;
    }
    let body = mantissa.to_string();
    let sign = if neg { "-" } else { "" };
    if e >= -6 && e < digits as i64 {
        let out = if e >= 0 {
            let int_len = e as usize + 1;
            let (int_part, frac) = body.split_at(int_len);
            let frac = frac.trim_end_matches('0');
            if frac.is_empty() {
                int_part.to_string()
            } else {
                format!("{int_part}.{frac}")
            }
        } else {
            let zeros = "0".repeat((-e - 1) as usize);
            format!("0.{zeros}{}", body.trim_end_matches('0'))
        };
        format!("{sign}{out}")
    } else {
        let (lead, frac) = body.split_at(1);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            format!("{sign}{lead}e{e}")
        } else {
            format!("{sign}{lead}.{frac}e{e}")
        }
    }
}

/// Shortest round-trip rendering, switching to exponent form outside
/// `[1e-5, 1e15)` so tiny weights stay compact.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}
