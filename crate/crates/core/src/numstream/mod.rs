//! Exact base-`b` digit streams for a catalog of reals, plus the exact
//! nearness test `|r - x| < delta` every complexity search relies on.
//!
//! Variants with a native digit source (rationals, square roots,
//! Champernowne, pseudorandom streams, digit files, binary interleaves) are
//! expanded directly. Everything else goes through rational enclosures
//! `lo <= x <= hi` that are refined until the requested digits or
//! comparison are certain. Refinement stops at `4 * p + 64` native digits,
//! where `p` is the precision the request needs; a request still undecided
//! there is reported as [`Error::TieUnresolvable`].

pub mod cache;
mod expand;
mod spec;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub use expand::{champernowne_digit_at, splitmix64};
pub use spec::{check_base, Parity, RealSpec, MAX_BASE};

use crate::error::{Error, Result};
use crate::ratio;

/// A finite string over `Σ_b`, read as the fractional digits `0.d1 d2 ...`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DigitPrefix {
    base: u32,
    digits: Vec<u8>,
}

impl DigitPrefix {
    pub fn new(base: u32, digits: Vec<u8>) -> Result<Self> {
        check_base(base)?;
        if let Some(bad) = digits.iter().find(|&&d| d as u32 >= base) {
            return Err(Error::InvalidArgument(format!(
                "digit {bad} is not below base {base}"
            )));
        }
        Ok(DigitPrefix { base, digits })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn into_digits(self) -> Vec<u8> {
        self.digits
    }

    /// The rational `0.σ`.
    pub fn value(&self) -> BigRational {
        ratio::fraction_value(&self.digits, self.base)
    }
}

/// The first `n` fractional digits of `spec` in `base`.
pub fn digits(spec: &RealSpec, base: u32, n: usize) -> Result<DigitPrefix> {
    check_base(base)?;
    let raw = match native_digits(spec, base, n)? {
        Some(d) => d,
        None => digits_via_enclosure(spec, base, n)?,
    };
    Ok(DigitPrefix { base, digits: raw })
}

fn native_digits(spec: &RealSpec, base: u32, n: usize) -> Result<Option<Vec<u8>>> {
    if let Some(x) = spec.exact_value() {
        if x.is_negative() || x >= BigRational::one() {
            return Err(Error::InvalidSpec(format!("`{spec}` leaves [0, 1)")));
        }
        return Ok(Some(expand::long_division(&x, base, n)));
    }
    Ok(match spec {
        RealSpec::SquareRoot(r) => Some(expand::sqrt_digits(*r, base, n)),
        RealSpec::Champernowne { base: b } if *b == base => {
            Some(expand::champernowne_digits(base, 0, n))
        }
        RealSpec::Pseudorandom { seed, base: b } if *b == base => {
            Some(expand::pseudorandom_digits(*seed, base, 0, n))
        }
        RealSpec::DigitFile { path, base: b } => {
            if *b != base {
                return Err(Error::BaseMismatch {
                    source_base: *b,
                    requested: base,
                });
            }
            let mut all = cache::read_digit_file(path, *b)?;
            if all.len() < n {
                return Err(Error::InsufficientPrecision {
                    needed: n,
                    available: all.len(),
                });
            }
            all.truncate(n);
            Some(all)
        }
        RealSpec::Interleave { parent, parity } if base == 2 => {
            let mut bits = digits(parent, 2, n)?.into_digits();
            for (i, bit) in bits.iter_mut().enumerate() {
                if !parity.keeps(i) {
                    *bit = 0;
                }
            }
            Some(bits)
        }
        _ => None,
    })
}

/// Closed rational enclosure `lo/den <= x <= hi/den`; `den > 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: BigInt,
    pub hi: BigInt,
    pub den: BigInt,
}

impl Interval {
    fn point(x: &BigRational) -> Self {
        Interval {
            lo: x.numer().clone(),
            hi: x.numer().clone(),
            den: x.denom().clone(),
        }
    }

    /// `[0.σ, 0.σ + base^-|σ|]`.
    fn from_prefix(digits: &[u8], base: u32) -> Self {
        let lo = BigInt::from_biguint(Sign::Plus, ratio::digits_to_uint(digits, base));
        Interval {
            hi: &lo + 1u32,
            lo,
            den: ratio::pow_int(base, digits.len()),
        }
    }

    pub fn lower(&self) -> BigRational {
        BigRational::new(self.lo.clone(), self.den.clone())
    }

    pub fn upper(&self) -> BigRational {
        BigRational::new(self.hi.clone(), self.den.clone())
    }
}

/// An enclosure of `spec` from `prec` native digits, or `None` when this
/// precision cannot yet separate the fractional part from an integer
/// boundary (possible only under `Scale`).
pub fn enclose(spec: &RealSpec, prec: usize) -> Result<Option<Interval>> {
    if let Some(x) = spec.exact_value() {
        return Ok(Some(Interval::point(&x)));
    }
    Ok(Some(match spec {
        RealSpec::Rational(_) => unreachable!("handled as exact"),
        RealSpec::SquareRoot(r) => {
            let scaled = (BigUint::from(*r) << (2 * prec)).sqrt();
            let whole = BigUint::from(r.sqrt()) << prec;
            let lo = BigInt::from_biguint(Sign::Plus, scaled - whole);
            Interval {
                hi: &lo + 1u32,
                lo,
                den: BigInt::one() << prec,
            }
        }
        RealSpec::Champernowne { base } => {
            Interval::from_prefix(&expand::champernowne_digits(*base, 0, prec), *base)
        }
        RealSpec::Pseudorandom { seed, base } => {
            Interval::from_prefix(&expand::pseudorandom_digits(*seed, *base, 0, prec), *base)
        }
        RealSpec::DigitFile { base, .. } => {
            Interval::from_prefix(digits(spec, *base, prec)?.digits(), *base)
        }
        RealSpec::Interleave { .. } => Interval::from_prefix(digits(spec, 2, prec)?.digits(), 2),
        RealSpec::Complement(inner) => match enclose(inner, prec)? {
            Some(iv) => Interval {
                lo: &iv.den - &iv.hi,
                hi: &iv.den - &iv.lo,
                den: iv.den,
            },
            None => return Ok(None),
        },
        RealSpec::Scale { q, inner } => match enclose(inner, prec)? {
            Some(iv) => {
                let lo = iv.lo * q.numer();
                let hi = iv.hi * q.numer();
                let den = iv.den * q.denom();
                let whole = lo.div_floor(&den);
                if whole != hi.div_floor(&den) {
                    return Ok(None);
                }
                let shift = &whole * &den;
                Interval {
                    lo: lo - &shift,
                    hi: hi - shift,
                    den,
                }
            }
            None => return Ok(None),
        },
    }))
}

fn native_precision(target_base: u32, target_digits: usize, native: u32) -> usize {
    let ratio = (target_base as f64).ln() / (native as f64).ln();
    (target_digits as f64 * ratio).ceil() as usize + 1
}

fn refinement_cap(need: usize) -> usize {
    4 * need + 64
}

fn digits_via_enclosure(spec: &RealSpec, base: u32, n: usize) -> Result<Vec<u8>> {
    let native = spec.native_base().unwrap_or(2);
    let need = native_precision(base, n, native);
    let cap = refinement_cap(need);
    let scale = ratio::pow_int(base, n);
    let mut prec = need + 16;
    loop {
        prec = prec.min(cap);
        if let Some(iv) = enclose(spec, prec)? {
            let lo = (&iv.lo * &scale).div_floor(&iv.den);
            let hi = (&iv.hi * &scale).div_floor(&iv.den);
            if lo == hi {
                let lo = lo.to_biguint().expect("fractional part is non-negative");
                return Ok(ratio::uint_to_digits(&lo, base, n));
            }
        }
        if prec == cap {
            return Err(Error::TieUnresolvable { cap });
        }
        prec *= 2;
    }
}

/// Decides `|r - x| < delta` for one fixed `x` and `delta` across many `r`,
/// keeping an enclosure of `x` fine enough that most queries resolve without
/// further refinement.
#[derive(Clone, Debug)]
pub struct Nearness {
    spec: RealSpec,
    delta: BigRational,
    cached: Option<(usize, Interval)>,
    cap: usize,
}

enum Verdict {
    Near,
    Far,
    Unknown,
}

impl Nearness {
    pub fn new(spec: &RealSpec, delta: &BigRational) -> Result<Self> {
        if !delta.is_positive() {
            return Err(Error::InvalidArgument("delta must be positive".into()));
        }
        let (cached, cap) = if let Some(x) = spec.exact_value() {
            (Some((0, Interval::point(&x))), 0)
        } else {
            let native = spec.native_base().unwrap_or(2);
            let need = ratio::digits_for(delta, native) + 1;
            let cap = refinement_cap(need);
            let mut prec = (need + 8).min(cap);
            let cached = loop {
                if let Some(iv) = enclose(spec, prec)? {
                    break Some((prec, iv));
                }
                if prec == cap {
                    break None;
                }
                prec = (prec * 2).min(cap);
            };
            (cached, cap)
        };
        Ok(Nearness {
            spec: spec.clone(),
            delta: delta.clone(),
            cached,
            cap,
        })
    }

    /// Convenience constructor for `delta = base^-n`.
    pub fn with_precision(spec: &RealSpec, base: u32, n: usize) -> Result<Self> {
        Self::new(spec, &ratio::ulp(base, n))
    }

    pub fn delta(&self) -> &BigRational {
        &self.delta
    }

    fn judge(&self, r: &BigRational, iv: &Interval) -> Verdict {
        // Everything over the common denominator r.den * iv.den.
        let a = r.numer() * &iv.den;
        let lo = &iv.lo * r.denom();
        let hi = &iv.hi * r.denom();
        let (dmin, dmax) = if a < lo {
            (&lo - &a, &hi - &a)
        } else if a > hi {
            (&a - &hi, &a - &lo)
        } else {
            let left = &a - &lo;
            let right = &hi - &a;
            (BigInt::zero(), left.max(right))
        };
        let bound = self.delta.numer() * r.denom() * &iv.den;
        let dd = self.delta.denom();
        if dmax * dd < bound {
            Verdict::Near
        } else if dmin * dd >= bound {
            Verdict::Far
        } else {
            Verdict::Unknown
        }
    }

    /// `|r - x| < delta`, exactly.
    pub fn test(&self, r: &BigRational) -> Result<bool> {
        let mut prec = match &self.cached {
            Some((prec, iv)) => match self.judge(r, iv) {
                Verdict::Near => return Ok(true),
                Verdict::Far => return Ok(false),
                Verdict::Unknown => *prec,
            },
            None => self.cap / 2,
        };
        while prec < self.cap {
            prec = (prec * 2).min(self.cap);
            if let Some(iv) = enclose(&self.spec, prec)? {
                match self.judge(r, &iv) {
                    Verdict::Near => return Ok(true),
                    Verdict::Far => return Ok(false),
                    Verdict::Unknown => {}
                }
            }
        }
        Err(Error::TieUnresolvable { cap: self.cap })
    }
}

/// `|r - x| < delta` for the real denoted by `spec`.
pub fn within(spec: &RealSpec, r: &BigRational, delta: &BigRational) -> Result<bool> {
    Nearness::new(spec, delta)?.test(r)
}

/// Splits `z` into the reals carried by its odd-numbered and even-numbered
/// binary positions, so that the two bit streams add up to `z`'s.
pub fn interleave_split(parent: &RealSpec) -> (RealSpec, RealSpec) {
    (
        RealSpec::interleave(parent.clone(), Parity::Even),
        RealSpec::interleave(parent.clone(), Parity::Odd),
    )
}

pub fn complement(inner: &RealSpec) -> Result<RealSpec> {
    RealSpec::complement(inner.clone())
}

pub fn scale(q: &BigRational, inner: &RealSpec) -> Result<RealSpec> {
    RealSpec::scale(q.clone(), inner.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn spec(text: &str) -> RealSpec {
        text.parse().unwrap()
    }

    fn d(s: &RealSpec, base: u32, n: usize) -> Vec<u8> {
        digits(s, base, n).unwrap().into_digits()
    }

    #[test]
    fn rational_long_division() {
        assert_eq!(d(&spec("rat:1/3"), 10, 4), vec![3, 3, 3, 3]);
        assert_eq!(d(&spec("rat:1/2"), 3, 5), vec![1, 1, 1, 1, 1]);
        // Terminating expansions end in zeros.
        assert_eq!(d(&spec("rat:1/2"), 2, 4), vec![1, 0, 0, 0]);
        assert_eq!(d(&spec("rat:0/1"), 7, 3), vec![0, 0, 0]);
    }

    #[test]
    fn champernowne_by_hand() {
        assert_eq!(
            d(&spec("champernowne:10"), 10, 16),
            vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 1, 0, 1, 1, 1, 2, 1]
        );
        assert_eq!(
            d(&spec("champernowne:2"), 2, 8),
            vec![1, 1, 0, 1, 1, 1, 0, 0]
        );
    }

    #[test]
    fn cross_base_conversion_matches_exact_value() {
        // 0.110111001011101111000... in binary, to 60 decimal digits, checked
        // against the rational built from 400 bits and its error bound.
        let c2 = spec("champernowne:2");
        let bits = d(&c2, 2, 400);
        let x = ratio::fraction_value(&bits, 2);
        let expected = ratio::scaled_floor(&x, 10, 60);
        let got = ratio::digits_to_uint(&d(&c2, 10, 60), 10);
        assert_eq!(BigInt::from_biguint(Sign::Plus, got), expected);
    }

    #[test]
    fn complement_and_scale_digits() {
        assert_eq!(d(&complement(&spec("rat:1/3")).unwrap(), 10, 4), vec![6; 4]);
        assert_eq!(scale(&q(2, 1), &spec("rat:1/3")).unwrap(), spec("rat:2/3"));
        let c2 = spec("champernowne:2");
        let half = scale(&q(1, 2), &c2).unwrap();
        let mut expected = vec![0];
        expected.extend(d(&c2, 2, 39));
        assert_eq!(d(&half, 2, 40), expected);
        // 1 - x flips every bit of a non-terminating binary expansion.
        let flipped: Vec<u8> = d(&c2, 2, 50).iter().map(|b| 1 - b).collect();
        assert_eq!(d(&complement(&c2).unwrap(), 2, 50), flipped);
        // frac(3x) for x = sqrt(2) - 1.
        let three = scale(&q(3, 1), &spec("sqrt:2")).unwrap();
        assert_eq!(d(&three, 10, 6), vec![2, 4, 2, 6, 4, 0]);
    }

    #[test]
    fn interleave_examples() {
        let (x, y) = interleave_split(&spec("rat:1/3"));
        assert_eq!(d(&x, 2, 8), vec![0; 8]);
        assert_eq!(d(&y, 2, 8), vec![0, 1, 0, 1, 0, 1, 0, 1]);
        let (x, y) = interleave_split(&spec("rat:11/16"));
        assert_eq!(d(&x, 2, 4), vec![1, 0, 1, 0]);
        assert_eq!(d(&y, 2, 4), vec![0, 0, 0, 1]);
    }

    #[test]
    fn within_examples() {
        assert!(within(&spec("rat:1/2"), &q(4, 9), &q(1, 9)).unwrap());
        assert!(!within(&spec("rat:1/2"), &q(1, 4), &q(1, 4)).unwrap());
        assert!(within(&spec("champernowne:10"), &q(1234, 10000), &q(1, 10000)).unwrap());
        assert!(!within(&spec("champernowne:10"), &q(1234, 10000), &q(5, 100000)).unwrap());
        assert!(within(&spec("sqrt:2"), &q(41421, 100000), &q(1, 100000)).unwrap());
    }

    #[test]
    fn digit_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.txt");
        std::fs::write(&path, "31415\n92").unwrap();
        let s = RealSpec::digit_file(&path, 10).unwrap();
        assert_eq!(d(&s, 10, 7), vec![3, 1, 4, 1, 5, 9, 2]);
        assert!(matches!(
            digits(&s, 10, 8),
            Err(Error::InsufficientPrecision {
                needed: 8,
                available: 7
            })
        ));
        assert!(matches!(digits(&s, 2, 3), Err(Error::BaseMismatch { .. })));
    }

    #[test]
    fn pseudorandom_is_reproducible() {
        let s = spec("prng:7:3");
        let a = d(&s, 3, 1000);
        assert_eq!(a, d(&s, 3, 1000));
        assert!(a.iter().all(|&x| x < 3));
        assert_eq!(&d(&s, 3, 1001)[..1000], &a[..]);
    }
}
