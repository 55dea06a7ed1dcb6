//! Cross-module invariants over randomly drawn specs, machines and words.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use normlab::blockstats;
use normlab::dimension;
use normlab::martingale::FsMartingale;
use normlab::numstream::{self, DigitPrefix, RealSpec};
use normlab::ratio;
use normlab::repsys::{self, RepSystem};
use normlab::transducer::Transducer;

fn spec_strategy() -> impl Strategy<Value = RealSpec> {
    let leaf = prop_oneof![
        (0i64..50, 1i64..50).prop_filter_map("proper fraction", |(p, q)| {
            (p < q).then(|| RealSpec::rational(p, q).unwrap())
        }),
        (2u64..40).prop_filter_map("non-square", |r| RealSpec::square_root(r).ok()),
        (2u32..=10).prop_map(|b| RealSpec::champernowne(b).unwrap()),
        (any::<u64>(), 2u32..=10).prop_map(|(s, b)| RealSpec::pseudorandom(s, b).unwrap()),
    ];
    leaf.prop_recursive(2, 4, 1, |inner| {
        prop_oneof![
            inner
                .clone()
                .prop_filter_map("complement", |s| numstream::complement(&s).ok()),
            (inner.clone(), 1i64..4, 1i64..4).prop_filter_map("scale", |(s, p, q)| {
                numstream::scale(&BigRational::new(p.into(), q.into()), &s).ok()
            }),
            (inner, any::<bool>()).prop_map(|(s, even)| {
                let (x, y) = numstream::interleave_split(&s);
                if even {
                    x
                } else {
                    y
                }
            }),
        ]
    })
}

fn numeral(digits: &[u8], base: u32) -> BigInt {
    digits.iter().fold(BigInt::zero(), |v, &d| v * base + d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(std::env::var("PROPTEST_CASES").ok().and_then(|c| c.parse().ok()).unwrap_or(48)))]

    #[test]
    fn digits_extend_as_prefixes(spec in spec_strategy(), base in 2u32..=10, n in 1usize..60, extra in 1usize..30) {
        let short = numstream::digits(&spec, base, n).unwrap();
        let long = numstream::digits(&spec, base, n + extra).unwrap();
        prop_assert_eq!(short.digits(), &long.digits()[..n]);
    }

    #[test]
    fn truncation_is_within_one_ulp(spec in spec_strategy(), base in 2u32..=10, n in 1usize..60) {
        let prefix = numstream::digits(&spec, base, n).unwrap();
        let ulp = ratio::ulp(base, n);
        prop_assert!(numstream::within(&spec, &prefix.value(), &ulp).unwrap());
        if let Some(x) = spec.exact_value() {
            let gap = &x - prefix.value();
            prop_assert!(!gap.is_negative() && gap < ulp);
        }
    }

    #[test]
    fn interleave_halves_sum_to_parent(spec in spec_strategy(), n in 1usize..200) {
        let base = 2;
        let (x, y) = numstream::interleave_split(&spec);
        let z = numstream::digits(&spec, base, n).unwrap();
        let xd = numstream::digits(&x, base, n).unwrap();
        let yd = numstream::digits(&y, base, n).unwrap();
        for i in 0..n {
            prop_assert_eq!(xd.digits()[i] + yd.digits()[i], z.digits()[i]);
            prop_assert!(xd.digits()[i] == 0 || yd.digits()[i] == 0);
        }
    }

    #[test]
    fn nearness_agrees_with_digits(spec in spec_strategy(), base in 2u32..=6, n in 1usize..12, sigma_seed in any::<u64>()) {
        let x = numstream::digits(&spec, base, n).unwrap();
        // Candidates clustered around x's own n-digit numeral.
        let center = numeral(x.digits(), base);
        let offset = BigInt::from(sigma_seed % 5) - BigInt::from(2);
        let cand: BigInt = center + offset;
        let top = BigInt::from(base).pow(n as u32);
        prop_assume!(!cand.is_negative() && cand < top);
        let r = BigRational::new(cand.clone(), top);
        if numstream::within(&spec, &r, &ratio::ulp(base, n)).unwrap() {
            let diff = cand - numeral(x.digits(), base);
            prop_assert!(diff.abs() <= BigInt::one());
        }
    }

    #[test]
    fn k_plus_one_counts_marginalize(spec in spec_strategy(), base in 2u32..=4, n in 3usize..400, k in 1usize..3) {
        let prefix = numstream::digits(&spec, base, n).unwrap();
        prop_assume!(k < n);
        let ck = blockstats::count_blocks(&prefix, k).unwrap();
        let ck1 = blockstats::count_blocks(&prefix, k + 1).unwrap();
        let last = &prefix.digits()[n - k..];
        let total: u64 = ck.counts().iter().sum();
        prop_assert_eq!(total, (n - k + 1) as u64);
        for (idx, &c) in ck.counts().iter().enumerate() {
            let block = ratio::uint_to_digits(&idx.into(), base, k);
            let marginal: u64 = (0..base as u8).map(|a| {
                let mut w = block.clone();
                w.push(a);
                ck1.count(&w)
            }).sum();
            // The final window has no successor.
            let boundary = u64::from(block == last);
            prop_assert_eq!(marginal + boundary, c);
        }
    }

    #[test]
    fn c_nd_is_capped_and_monotone(seed in any::<u64>(), base in 2u32..=3, states in 1usize..=3, num in 0i64..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Transducer::random(&mut rng, base, states, 2).unwrap();
        let x = RealSpec::rational(num, 9).unwrap();
        let mut prev = 0;
        for n in 1..=6 {
            let e = d.c_nd(&x, n).unwrap();
            prop_assert!(e.value <= n + 1);
            prop_assert_eq!(e.cap_hit, e.value == n + 1);
            prop_assert!(e.value >= prev);
            prev = e.value;
        }
    }

    #[test]
    fn repsys_values_respect_the_cap(num in 0i64..27, base in 2u32..=3, n in 1usize..=7, q in 1i64..4, r in 0i64..3) {
        let x = RealSpec::rational(num, 27).unwrap();
        let f = RepSystem::affine(BigRational::new(q.into(), 3.into()), BigRational::new(r.into(), 4.into()), RepSystem::identity(base).unwrap());
        let e = repsys::c_f_n(&x, &f, n).unwrap();
        prop_assert!(e.value <= n + 1);
        prop_assert_eq!(e.cap_hit, e.value == n + 1);
    }

    #[test]
    fn zero_stakes_are_absorbing(seed in any::<u64>(), base in 2u32..=4, word in prop::collection::vec(0u8..4, 0..40)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = FsMartingale::random(&mut rng, base, 3, 4).unwrap();
        let word: Vec<u8> = word.into_iter().map(|d| d % base as u8).collect();
        let prefix = DigitPrefix::new(base, word.clone()).unwrap();
        let caps = m.capital_exact(&prefix).unwrap();
        let mut dead = false;
        for (i, c) in caps.iter().enumerate() {
            if dead {
                prop_assert!(c.is_zero());
            } else {
                prop_assert!(c.is_positive());
            }
            if i < word.len() && m.stake(m.state_after(&word[..i]), word[i]).is_zero() {
                dead = true;
            }
        }
    }

    #[test]
    fn codecs_round_trip(base_idx in 0usize..4, word in prop::collection::vec(any::<u8>(), 1..=512), zero_tail in 0usize..512) {
        let base = [2u32, 3, 10, 256][base_idx];
        let mut w: Vec<u8> = word.into_iter().map(|d| (d as u32 % base) as u8).collect();
        let keep = zero_tail.min(w.len());
        w[keep..].iter_mut().for_each(|d| *d = 0);
        for codec in dimension::default_codecs(base).unwrap() {
            let p = codec.encode(&w, base).unwrap();
            prop_assert_eq!(&codec.decode(&p, base).unwrap(), &w, "{}", codec.name());
            prop_assert!(dimension::k_m(codec.as_ref(), &w, base).unwrap() <= w.len());
        }
    }
}
