//! Closed-form entries of `M^H` and `N^H` in exact rational arithmetic.
//!
//! The alternating sum carries binomial coefficients of size up to
//! `binom(i-j, ·)` with alternating sign, so it loses roughly `i-j` bits to
//! cancellation in floating point. Everything here stays in `BigRational`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// `binom(n, k)` as a big integer (zero when `k > n`).
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for t in 0..k {
        acc *= n - t;
        acc /= t + 1;
    }
    acc
}

/// Row `n` of Pascal's triangle: `binom(n, 0..=n)`.
fn pascal_row(n: u64) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigInt::one();
    row.push(c.clone());
    for k in 0..n {
        c = c * (n - k) / (k + 1);
        row.push(c.clone());
    }
    row
}

fn check_positions(i: usize, j: usize) -> Result<()> {
    if i == 0 || j == 0 {
        return Err(Error::InvalidDimension(format!(
            "positions are 1-based, got (i, j) = ({i}, {j})"
        )));
    }
    Ok(())
}

/// `(M^H)_{i,j} = binom(i-1, j-1) Σ_{m=j}^{i} (-1)^{m-j} binom(i-j, m-j) m^{-H}`.
///
/// Returns zero above the diagonal and the Kronecker delta for `H = 0`.
pub fn closed_form_entry_m(i: usize, j: usize, h: u32) -> Result<BigRational> {
    check_positions(i, j)?;
    if j > i {
        return Ok(BigRational::zero());
    }
    if h == 0 {
        return Ok(if i == j { BigRational::one() } else { BigRational::zero() });
    }
    let span = (i - j) as u64;
    let coeffs = pascal_row(span);
    let mut sum = BigRational::zero();
    for (k, c) in coeffs.into_iter().enumerate() {
        let m = BigInt::from(j + k);
        let term = BigRational::new(c, num_traits::pow(m, h as usize));
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    Ok(sum * BigRational::from_integer(binomial((i - 1) as u64, (j - 1) as u64)))
}

/// `(N^H)_{i,j} = (1-α)^H δ_{ij} + Σ_{r=1}^{H} binom(H, r) α^r (1-α)^{H-r} (M^r)_{i,j}`.
pub fn closed_form_entry_n(i: usize, j: usize, h: u32, alpha: &BigRational) -> Result<BigRational> {
    check_positions(i, j)?;
    if *alpha < BigRational::zero() || *alpha > BigRational::one() {
        return Err(Error::InvalidParameter("alpha must lie in [0, 1]".into()));
    }
    if j > i {
        return Ok(BigRational::zero());
    }
    let keep = BigRational::one() - alpha;
    let mut sum = if i == j {
        num_traits::pow(keep.clone(), h as usize)
    } else {
        BigRational::zero()
    };
    if alpha.is_zero() {
        return Ok(sum);
    }
    let binoms = pascal_row(h as u64);
    for r in 1..=h {
        let weight = BigRational::from_integer(binoms[r as usize].clone())
            * num_traits::pow(alpha.clone(), r as usize)
            * num_traits::pow(keep.clone(), (h - r) as usize);
        if weight.is_zero() {
            continue;
        }
        sum += weight * closed_form_entry_m(i, j, r)?;
    }
    Ok(sum)
}

/// Whole last row `(M^H)_{L, 1..=L}` via the closed form.
pub fn closed_form_row_m(len: usize, h: u32) -> Result<Vec<BigRational>> {
    (1..=len).map(|j| closed_form_entry_m(len, j, h)).collect()
}

/// Whole last row `(N^H)_{L, 1..=L}` via the closed form.
pub fn closed_form_row_n(len: usize, h: u32, alpha: &BigRational) -> Result<Vec<BigRational>> {
    (1..=len).map(|j| closed_form_entry_n(len, j, h, alpha)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(0, 0), BigInt::from(1));
        assert_eq!(binomial(3, 4), BigInt::from(0));
        assert_eq!(pascal_row(4), [1, 4, 6, 4, 1].map(BigInt::from).to_vec());
    }

    #[test]
    fn m_examples() {
        assert_eq!(closed_form_entry_m(3, 1, 2).unwrap(), q(11, 18));
        assert_eq!(closed_form_entry_m(2, 1, 1).unwrap(), q(1, 2));
        assert_eq!(closed_form_entry_m(2, 1, 2).unwrap(), q(3, 4));
        for i in 1..=9 {
            for h in 0..6u32 {
                let want = BigRational::new(1.into(), num_traits::pow(BigInt::from(i), h as usize));
                assert_eq!(closed_form_entry_m(i, i, h).unwrap(), want);
            }
        }
    }

    #[test]
    fn m_edge_cases() {
        assert_eq!(closed_form_entry_m(2, 5, 3).unwrap(), q(0, 1));
        assert_eq!(closed_form_entry_m(4, 2, 0).unwrap(), q(0, 1));
        assert_eq!(closed_form_entry_m(4, 4, 0).unwrap(), q(1, 1));
        assert!(matches!(closed_form_entry_m(0, 1, 2), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn n_examples() {
        assert_eq!(closed_form_entry_n(2, 1, 2, &q(1, 2)).unwrap(), q(7, 16));
        assert_eq!(closed_form_entry_n(2, 2, 2, &q(1, 2)).unwrap(), q(9, 16));
        for (i, j, h) in [(3, 1, 2), (5, 3, 4), (6, 6, 1)] {
            let zero = closed_form_entry_n(i, j, h, &q(0, 1)).unwrap();
            assert_eq!(zero, if i == j { q(1, 1) } else { q(0, 1) });
            assert_eq!(
                closed_form_entry_n(i, j, h, &q(1, 1)).unwrap(),
                closed_form_entry_m(i, j, h).unwrap()
            );
        }
        assert!(closed_form_entry_n(3, 1, 2, &q(3, 2)).is_err());
    }

    #[test]
    fn rows_are_stochastic() {
        for h in 1..6 {
            let s: BigRational = closed_form_row_m(10, h).unwrap().into_iter().sum();
            assert_eq!(s, q(1, 1));
            let s: BigRational = closed_form_row_n(10, h, &q(1, 3)).unwrap().into_iter().sum();
            assert_eq!(s, q(1, 1));
        }
    }
}
