//! Small exact-arithmetic helpers shared by the digit, search and codec code.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub fn pow(base: u32, exp: usize) -> BigUint {
    num_traits::pow(BigUint::from(base), exp)
}

pub fn pow_int(base: u32, exp: usize) -> BigInt {
    BigInt::from_biguint(Sign::Plus, pow(base, exp))
}

/// `base^-exp` as an exact rational.
pub fn ulp(base: u32, exp: usize) -> BigRational {
    BigRational::new_raw(BigInt::one(), pow_int(base, exp))
}

/// Big-endian digits to an integer.
pub fn digits_to_uint(digits: &[u8], base: u32) -> BigUint {
    if digits.is_empty() {
        return BigUint::zero();
    }
    BigUint::from_radix_be(digits, base).expect("digits validated against base")
}

/// Exactly `width` big-endian digits of `value`, left-padded with zeros.
/// `value` must be below `base^width`.
pub fn uint_to_digits(value: &BigUint, base: u32, width: usize) -> Vec<u8> {
    if width == 0 {
        return Vec::new();
    }
    let raw = if value.is_zero() {
        Vec::new()
    } else {
        value.to_radix_be(base)
    };
    debug_assert!(raw.len() <= width);
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(&raw);
    out
}

/// The rational `0.σ` whose finite base-`base` representation is `digits`.
pub fn fraction_value(digits: &[u8], base: u32) -> BigRational {
    let num = BigInt::from_biguint(Sign::Plus, digits_to_uint(digits, base));
    BigRational::new(num, pow_int(base, digits.len()))
}

pub fn floor(x: &BigRational) -> BigInt {
    x.numer().div_floor(x.denom())
}

pub fn frac(x: &BigRational) -> BigRational {
    x - BigRational::from_integer(floor(x))
}

/// `floor(x * base^n)` for `x` in `[0, 1)`, as an unsigned integer.
pub fn scaled_floor(x: &BigRational, base: u32, n: usize) -> BigInt {
    (x.numer() * pow_int(base, n)).div_floor(x.denom())
}

/// Parses `p/q`, `p`, or `-p/q`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let bad = || Error::InvalidArgument(format!("malformed fraction `{text}`"));
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if !den.is_positive() {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}

pub fn format_rational(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Nearest `f64`; only for reporting.
pub fn to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

/// Smallest `p` with `base^-p <= delta`.
pub fn digits_for(delta: &BigRational, base: u32) -> usize {
    assert!(delta.is_positive());
    let mut p = 0usize;
    let mut scaled = delta.clone();
    let b = BigRational::from_integer(BigInt::from(base));
    while scaled < BigRational::one() {
        scaled *= &b;
        p += 1;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn fraction_value_matches_positional_sum() {
        assert_eq!(fraction_value(&[1, 1], 3), q(4, 9));
        assert_eq!(fraction_value(&[], 7), q(0, 1));
        assert_eq!(fraction_value(&[5], 10), q(1, 2));
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("4/6").unwrap(), q(2, 3));
        assert_eq!(parse_rational("-1/2").unwrap(), q(-1, 2));
        assert_eq!(parse_rational("3").unwrap(), q(3, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a/2").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn digits_for_counts_powers() {
        assert_eq!(digits_for(&q(1, 1000), 10), 3);
        assert_eq!(digits_for(&q(1, 999), 10), 3);
        assert_eq!(digits_for(&q(1, 1001), 10), 4);
        assert_eq!(digits_for(&q(2, 1), 2), 0);
    }

    #[test]
    fn padded_digits() {
        assert_eq!(
            uint_to_digits(&BigUint::from(5u32), 2, 5),
            vec![0, 0, 1, 0, 1]
        );
        assert_eq!(uint_to_digits(&BigUint::zero(), 10, 3), vec![0, 0, 0]);
    }
}
