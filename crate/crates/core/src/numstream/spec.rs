use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::ratio;

/// Largest supported digit base. Digits are stored as `u8`.
pub const MAX_BASE: u32 = 256;

pub fn check_base(base: u32) -> Result<()> {
    if (2..=MAX_BASE).contains(&base) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "base {base} outside 2..={MAX_BASE}"
        )))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    /// Keeps positions 1, 3, 5, ... of the parent's binary expansion.
    Even,
    /// Keeps positions 2, 4, 6, ...
    Odd,
}

impl Parity {
    /// Whether the 0-based bit index `i` survives the mask.
    pub fn keeps(self, i: usize) -> bool {
        match self {
            Parity::Even => i.is_multiple_of(2),
            Parity::Odd => i % 2 == 1,
        }
    }
}

/// Symbolic description of a real in `[0, 1)`.
///
/// Every variant denotes exactly one real. Terminating expansions are always
/// written with trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RealSpec {
    Rational(BigRational),
    Champernowne {
        base: u32,
    },
    SquareRoot(u64),
    DigitFile {
        path: PathBuf,
        base: u32,
    },
    Pseudorandom {
        seed: u64,
        base: u32,
    },
    Interleave {
        parent: Box<RealSpec>,
        parity: Parity,
    },
    Complement(Box<RealSpec>),
    /// Fractional part of `q * inner`.
    Scale {
        q: BigRational,
        inner: Box<RealSpec>,
    },
}

impl RealSpec {
    pub fn rational(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self> {
        let den = den.into();
        if !den.is_positive() {
            return Err(Error::InvalidSpec("denominator must be positive".into()));
        }
        Self::from_ratio(BigRational::new(num.into(), den))
    }

    pub fn from_ratio(x: BigRational) -> Result<Self> {
        if x.is_negative() || x >= BigRational::one() {
            return Err(Error::InvalidSpec(format!(
                "rational {} is outside [0, 1)",
                ratio::format_rational(&x)
            )));
        }
        Ok(RealSpec::Rational(x))
    }

    pub fn champernowne(base: u32) -> Result<Self> {
        check_base(base).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        Ok(RealSpec::Champernowne { base })
    }

    pub fn square_root(n: u64) -> Result<Self> {
        if n == 0 || n.sqrt() * n.sqrt() == n {
            return Err(Error::InvalidSpec(format!(
                "sqrt({n}) needs a positive non-square"
            )));
        }
        Ok(RealSpec::SquareRoot(n))
    }

    pub fn pseudorandom(seed: u64, base: u32) -> Result<Self> {
        check_base(base).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        Ok(RealSpec::Pseudorandom { seed, base })
    }

    pub fn digit_file(path: impl Into<PathBuf>, base: u32) -> Result<Self> {
        check_base(base).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        Ok(RealSpec::DigitFile {
            path: path.into(),
            base,
        })
    }

    pub fn interleave(parent: RealSpec, parity: Parity) -> Self {
        RealSpec::Interleave {
            parent: Box::new(parent),
            parity,
        }
    }

    /// `1 - x`. Rejects the rational `0`, whose complement leaves `[0, 1)`.
    pub fn complement(inner: RealSpec) -> Result<Self> {
        match inner.exact_value() {
            Some(x) if x.is_zero() => Err(Error::InvalidSpec(
                "complement needs an inner value in (0, 1)".into(),
            )),
            Some(x) => Self::from_ratio(BigRational::one() - x),
            None => Ok(RealSpec::Complement(Box::new(inner))),
        }
    }

    /// `frac(q * x)`.
    pub fn scale(q: BigRational, inner: RealSpec) -> Result<Self> {
        if !q.is_positive() {
            return Err(Error::InvalidSpec("scale factor must be positive".into()));
        }
        match inner.exact_value() {
            Some(x) => Self::from_ratio(ratio::frac(&(q * x))),
            None => Ok(RealSpec::Scale {
                q,
                inner: Box::new(inner),
            }),
        }
    }

    /// The denoted value when it is a known rational.
    pub fn exact_value(&self) -> Option<BigRational> {
        match self {
            RealSpec::Rational(x) => Some(x.clone()),
            RealSpec::Complement(inner) => inner.exact_value().map(|x| BigRational::one() - x),
            RealSpec::Scale { q, inner } => inner.exact_value().map(|x| ratio::frac(&(q * x))),
            RealSpec::Interleave { parent, parity } => match parent.as_ref() {
                // Opposite masks keep disjoint positions.
                RealSpec::Interleave { parity: inner, .. } if inner != parity => {
                    Some(BigRational::zero())
                }
                _ => parent
                    .exact_value()
                    .and_then(|x| masked_rational(&x, *parity)),
            },
            _ => None,
        }
    }

    /// Base whose digits the variant produces natively; `None` for exact rationals.
    pub fn native_base(&self) -> Option<u32> {
        match self {
            RealSpec::Rational(_) => None,
            RealSpec::SquareRoot(_) | RealSpec::Interleave { .. } => Some(2),
            RealSpec::Champernowne { base }
            | RealSpec::Pseudorandom { base, .. }
            | RealSpec::DigitFile { base, .. } => Some(*base),
            RealSpec::Complement(inner) | RealSpec::Scale { inner, .. } => inner.native_base(),
        }
    }
}

/// Longest binary period followed when masking a rational.
const MASK_PERIOD_LIMIT: usize = 1 << 16;

/// The value of `x`'s binary expansion with the bits `parity` drops set to
/// zero. The expansion is eventually periodic, so the result is rational;
/// `None` when the period exceeds [`MASK_PERIOD_LIMIT`].
fn masked_rational(x: &BigRational, parity: Parity) -> Option<BigRational> {
    let q = x.denom();
    let mut r = x.numer().clone();
    let mut seen = std::collections::HashMap::new();
    let mut bits = Vec::new();
    let start = loop {
        if let Some(&i) = seen.get(&r) {
            break i;
        }
        if bits.len() > MASK_PERIOD_LIMIT {
            return None;
        }
        seen.insert(r.clone(), bits.len());
        r <<= 1;
        let bit = r >= *q;
        if bit {
            r -= q;
        }
        bits.push(u8::from(bit));
    };
    let period = bits.len() - start;
    // The mask has period 2, so the masked tail repeats every lcm(period, 2).
    let len = if period % 2 == 0 { period } else { 2 * period };
    let bit_at = |i: usize| {
        let b = if i < start {
            bits[i]
        } else {
            bits[start + (i - start) % period]
        };
        if parity.keeps(i) {
            b
        } else {
            0
        }
    };
    let head = (0..start).fold(BigInt::zero(), |v, i| (v << 1) + bit_at(i));
    let block = (start..start + len).fold(BigInt::zero(), |v, i| (v << 1) + bit_at(i));
    let cycle = (BigInt::one() << len) - 1;
    let scale = BigInt::one() << start;
    Some(BigRational::new(head * &cycle + block, cycle * scale))
}

impl fmt::Display for RealSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealSpec::Rational(x) => write!(f, "rat:{}", ratio::format_rational(x)),
            RealSpec::Champernowne { base } => write!(f, "champernowne:{base}"),
            RealSpec::SquareRoot(n) => write!(f, "sqrt:{n}"),
            RealSpec::DigitFile { path, base } => write!(f, "file:{base}:{}", path.display()),
            RealSpec::Pseudorandom { seed, base } => write!(f, "prng:{seed}:{base}"),
            RealSpec::Interleave { parent, parity } => {
                let p = match parity {
                    Parity::Even => "even",
                    Parity::Odd => "odd",
                };
                write!(f, "interleave:{p}:{parent}")
            }
            RealSpec::Complement(inner) => write!(f, "complement:{inner}"),
            RealSpec::Scale { q, inner } => {
                write!(f, "scale:{}:{inner}", ratio::format_rational(q))
            }
        }
    }
}

fn field<'a>(parts: &mut std::str::SplitN<'a, char>, what: &str, text: &str) -> Result<&'a str> {
    parts
        .next()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::InvalidSpec(format!("`{text}`: missing {what}")))
}

fn int<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidSpec(format!("bad {what} `{s}`")))
}

impl FromStr for RealSpec {
    type Err = Error;

    /// Parses the canonical colon form, e.g. `rat:1/3`, `champernowne:10`,
    /// `scale:1/2:interleave:odd:champernowne:2`.
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (head, rest) = text.split_once(':').unwrap_or((text, ""));
        match head {
            "rat" => {
                let x =
                    ratio::parse_rational(rest).map_err(|e| Error::InvalidSpec(e.to_string()))?;
                Self::from_ratio(x)
            }
            "champernowne" => Self::champernowne(int(rest, "base")?),
            "sqrt" => Self::square_root(int(rest, "radicand")?),
            "prng" => {
                let mut parts = rest.splitn(2, ':');
                let seed = int(field(&mut parts, "seed", text)?, "seed")?;
                let base = int(field(&mut parts, "base", text)?, "base")?;
                Self::pseudorandom(seed, base)
            }
            "file" => {
                let mut parts = rest.splitn(2, ':');
                let base = int(field(&mut parts, "base", text)?, "base")?;
                let path = field(&mut parts, "path", text)?;
                Self::digit_file(path, base)
            }
            "interleave" => {
                let mut parts = rest.splitn(2, ':');
                let parity = match field(&mut parts, "parity", text)? {
                    "even" => Parity::Even,
                    "odd" => Parity::Odd,
                    other => {
                        return Err(Error::InvalidSpec(format!("bad parity `{other}`")));
                    }
                };
                let parent = field(&mut parts, "parent", text)?.parse()?;
                Ok(Self::interleave(parent, parity))
            }
            "complement" => Self::complement(rest.parse()?),
            "scale" => {
                let mut parts = rest.splitn(2, ':');
                let q = ratio::parse_rational(field(&mut parts, "factor", text)?)
                    .map_err(|e| Error::InvalidSpec(e.to_string()))?;
                let inner = field(&mut parts, "inner spec", text)?.parse()?;
                Self::scale(q, inner)
            }
            _ => Err(Error::InvalidSpec(format!("unknown spec `{text}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(x: &BigRational, n: usize) -> Vec<u8> {
        let mut r = x.clone();
        (0..n)
            .map(|_| {
                r = &r * BigRational::from_integer(2.into());
                let bit = r >= BigRational::one();
                if bit {
                    r -= BigRational::one();
                }
                u8::from(bit)
            })
            .collect()
    }

    #[test]
    fn masks_of_rationals_are_exact() {
        let third = BigRational::new(1.into(), 3.into());
        assert_eq!(masked_rational(&third, Parity::Odd), Some(third.clone()));
        assert_eq!(
            masked_rational(&third, Parity::Even),
            Some(BigRational::zero())
        );
        for (p, q) in [(1, 7), (5, 12), (3, 8), (11, 13), (1, 2), (0, 1), (97, 100)] {
            let x = BigRational::new(p.into(), q.into());
            for parity in [Parity::Even, Parity::Odd] {
                let masked = masked_rational(&x, parity).unwrap();
                let want: Vec<u8> = bits(&x, 300)
                    .into_iter()
                    .enumerate()
                    .map(|(i, b)| if parity.keeps(i) { b } else { 0 })
                    .collect();
                assert_eq!(bits(&masked, 300), want, "{p}/{q} {parity:?}");
            }
        }
        let spec = RealSpec::interleave(RealSpec::rational(1, 3).unwrap(), Parity::Odd);
        assert_eq!(spec.exact_value(), Some(third));
        let root = RealSpec::square_root(5).unwrap();
        let twice = RealSpec::interleave(
            RealSpec::interleave(root.clone(), Parity::Odd),
            Parity::Even,
        );
        assert_eq!(twice.exact_value(), Some(BigRational::zero()));
        assert_eq!(RealSpec::interleave(root, Parity::Odd).exact_value(), None);
    }

    #[test]
    fn canonical_round_trip() {
        for text in [
            "rat:1/3",
            "champernowne:10",
            "sqrt:2",
            "prng:42:2",
            "file:10:/tmp/digits.txt",
            "interleave:odd:champernowne:2",
            "complement:sqrt:3",
            "scale:1/2:champernowne:2",
            "scale:3/7:complement:prng:1:5",
        ] {
            let spec: RealSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
    }

    #[test]
    fn rational_combinators_simplify() {
        let third = RealSpec::rational(1, 3).unwrap();
        assert_eq!(
            RealSpec::scale(BigRational::from_integer(2.into()), third.clone()).unwrap(),
            RealSpec::rational(2, 3).unwrap()
        );
        assert_eq!(
            RealSpec::complement(third).unwrap(),
            RealSpec::rational(2, 3).unwrap()
        );
        assert_eq!(
            "scale:3:rat:1/2".parse::<RealSpec>().unwrap().to_string(),
            "rat:1/2"
        );
    }

    #[test]
    fn rejects_bad_specs() {
        for text in [
            "rat:3/2",
            "rat:-1/2",
            "rat:1/0",
            "sqrt:16",
            "sqrt:0",
            "champernowne:1",
            "champernowne:300",
            "complement:rat:0/1",
            "scale:-1:champernowne:2",
            "interleave:sideways:rat:1/3",
            "prng:1",
            "bogus:1",
            "",
        ] {
            assert!(text.parse::<RealSpec>().is_err(), "{text}");
        }
    }
}
