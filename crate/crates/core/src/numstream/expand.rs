//! Native digit generators for the concrete variants.

use num_bigint::BigUint;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Long division of `x` in `[0, 1)`.
pub fn long_division(x: &BigRational, base: u32, n: usize) -> Vec<u8> {
    let num = x.numer().to_biguint().expect("non-negative rational");
    let den = x.denom().to_biguint().expect("positive denominator");
    if let (Some(r), Some(d)) = (num.to_u64(), den.to_u64()) {
        let (b, d) = (base as u128, d as u128);
        let mut rem = r as u128;
        return (0..n)
            .map(|_| {
                rem *= b;
                let digit = (rem / d) as u8;
                rem %= d;
                digit
            })
            .collect();
    }
    let b = BigUint::from(base);
    let mut rem = num;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        rem *= &b;
        let q = &rem / &den;
        out.push(q.to_u8().expect("quotient digit below base"));
        rem -= q * &den;
    }
    out
}

/// Fractional digits of `sqrt(radicand)` by the schoolbook digit-by-digit
/// recurrence: with root-so-far `p` and remainder `r`, the next digit is the
/// largest `d` such that `(2·p·b + d)·d <= r·b²`.
pub fn sqrt_digits(radicand: u64, base: u32, n: usize) -> Vec<u8> {
    let a = radicand.sqrt();
    let b = BigUint::from(base);
    let mut p = BigUint::from(a);
    let mut r = BigUint::from(radicand - a * a);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        r = r * &b * &b;
        let twice_pb = &p * &b * 2u32;
        let mut d = if twice_pb.is_zero() {
            base - 1
        } else {
            (&r / &twice_pb).to_u32().unwrap_or(base - 1).min(base - 1)
        };
        let mut take = (&twice_pb + d) * d;
        while take > r {
            d -= 1;
            take = (&twice_pb + d) * d;
        }
        r -= take;
        p = p * &b + d;
        out.push(d as u8);
    }
    out
}

/// Locates the 0-based position `index` of the concatenation `1 2 3 ...`
/// written in `base`: returns the number holding that digit and the digit's
/// offset within the number's numeral.
fn champernowne_locate(base: u32, mut index: u64) -> (u64, usize) {
    let b = base as u64;
    let mut len = 1usize;
    let mut first = 1u64;
    loop {
        let count = first * (b - 1);
        let span = count.saturating_mul(len as u64);
        if index < span {
            let number = first + index / len as u64;
            return (number, (index % len as u64) as usize);
        }
        index -= span;
        len += 1;
        first *= b;
    }
}

fn numeral(mut value: u64, base: u32, buf: &mut Vec<u8>) {
    buf.clear();
    let b = base as u64;
    while value > 0 {
        buf.push((value % b) as u8);
        value /= b;
    }
    buf.reverse();
}

/// Digit at 0-based position `index`, by direct positional indexing.
pub fn champernowne_digit_at(base: u32, index: u64) -> u8 {
    let (number, offset) = champernowne_locate(base, index);
    let mut buf = Vec::new();
    numeral(number, base, &mut buf);
    buf[offset]
}

/// `count` digits starting at 0-based position `start`.
pub fn champernowne_digits(base: u32, start: u64, count: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let (mut number, offset) = champernowne_locate(base, start);
    let mut buf = Vec::new();
    numeral(number, base, &mut buf);
    out.extend(buf[offset..].iter().take(count));
    while out.len() < count {
        number += 1;
        numeral(number, base, &mut buf);
        let take = (count - out.len()).min(buf.len());
        out.extend_from_slice(&buf[..take]);
    }
    out
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output for counter `i` of the stream seeded with `seed`.
/// Being counter-based, any position is addressable directly.
pub fn splitmix64(seed: u64, i: u64) -> u64 {
    let mut z = seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(i.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pseudorandom digits: digit `i` is the high part of `splitmix64(seed, i) * base`.
pub fn pseudorandom_digits(seed: u64, base: u32, start: u64, count: usize) -> Vec<u8> {
    (start..start + count as u64)
        .map(|i| ((splitmix64(seed, i) as u128 * base as u128) >> 64) as u8)
        .collect()
}
