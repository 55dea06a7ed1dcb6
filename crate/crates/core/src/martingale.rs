//! Finite-state `Σ_b`-martingales as stake-vector automata.
//!
//! In state `q` the strategy splits its capital over the next digit with the
//! stake vector `stakes(q)`; after digit `a` the capital becomes
//! `b · stakes(q)[a] · d(w)`. Fairness, `d(w) = (1/b) Σ_a d(wa)`, holds exactly
//! when every stake vector sums to one.
//!
//! Text format mirrors transducers, with stake lines and an initial capital:
//!
//! ```text
//! base=2 states=2 start=a capital=1
//! a 0 -> b
//! a 1 -> a
//! b 0 -> a
//! b 1 -> b
//! a : 1/2,1/2
//! b : 1/3,2/3
//! ```

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::numstream::{self, check_base, DigitPrefix, RealSpec};
use crate::ratio;
use crate::transducer::parse_table;

/// Prefix lengths up to which `capital` answers with exact rationals.
pub const EXACT_LIMIT: usize = 1000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FsMartingale {
    base: u32,
    states: Vec<String>,
    start: usize,
    next: Vec<usize>,
    stakes: Vec<Vec<BigRational>>,
    initial: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FairnessViolation {
    pub state: String,
    pub sum: BigRational,
    pub negative: bool,
}

impl fmt::Display for FairnessViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            write!(f, "state `{}` has a negative stake", self.state)
        } else {
            write!(
                f,
                "stakes of state `{}` sum to {}, not 1",
                self.state,
                ratio::format_rational(&self.sum)
            )
        }
    }
}

/// Capital along a prefix: `d(w[1..i])` for `i = 0..=n`.
#[derive(Clone, Debug, PartialEq)]
pub enum Capitals {
    Exact(Vec<BigRational>),
    /// Base-2 logarithms; `-inf` once a zero stake has been hit.
    Log2(Vec<f64>),
}

impl FsMartingale {
    /// Builds a machine without checking fairness; see [`FsMartingale::fairness_check`].
    pub fn new(
        base: u32,
        states: Vec<String>,
        start: usize,
        next: Vec<usize>,
        stakes: Vec<Vec<BigRational>>,
        initial: BigRational,
    ) -> Result<Self> {
        check_base(base)?;
        let m = states.len();
        if m == 0 || start >= m {
            return Err(Error::InvalidArgument("start state out of range".into()));
        }
        if next.len() != m * base as usize || next.iter().any(|&q| q >= m) {
            return Err(Error::InvalidArgument("malformed transition table".into()));
        }
        if stakes.len() != m || stakes.iter().any(|s| s.len() != base as usize) {
            return Err(Error::InvalidArgument(format!(
                "need {m} stake vectors of length {base}"
            )));
        }
        if !initial.is_positive() {
            return Err(Error::InvalidArgument(
                "initial capital must be positive".into(),
            ));
        }
        Ok(FsMartingale {
            base,
            states,
            start,
            next,
            stakes,
            initial,
        })
    }

    /// One state, stake `1/b` on every digit.
    pub fn uniform(base: u32) -> Result<Self> {
        let s = vec![BigRational::new(BigInt::one(), BigInt::from(base)); base as usize];
        Self::new(
            base,
            vec!["q0".into()],
            0,
            vec![0; base as usize],
            vec![s],
            BigRational::one(),
        )
    }

    /// A cycle of `pattern.len()` states; state `i` stakes everything on
    /// `pattern[i]` and always moves to state `i + 1 mod len`.
    pub fn full_stake_cycle(base: u32, pattern: &[u8]) -> Result<Self> {
        let m = pattern.len();
        if m == 0 {
            return Err(Error::InvalidArgument("empty pattern".into()));
        }
        let states = (0..m).map(|i| format!("s{i}")).collect();
        let next = (0..m)
            .flat_map(|i| std::iter::repeat_n((i + 1) % m, base as usize))
            .collect();
        let stakes = pattern
            .iter()
            .map(|&target| {
                (0..base as u8)
                    .map(|a| {
                        if a == target {
                            BigRational::one()
                        } else {
                            BigRational::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(base, states, 0, next, stakes, BigRational::one())
    }

    /// A cycle of `stakes.len()` states stepping on every digit, with the given
    /// stake vectors.
    pub fn cycle(base: u32, stakes: Vec<Vec<BigRational>>) -> Result<Self> {
        let m = stakes.len();
        let states = (0..m).map(|i| format!("s{i}")).collect();
        let next = (0..m)
            .flat_map(|i| std::iter::repeat_n((i + 1) % m, base as usize))
            .collect();
        Self::new(base, states, 0, next, stakes, BigRational::one())
    }

    /// Random fair machine: stakes are random compositions of `granularity`.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        base: u32,
        states: usize,
        granularity: u32,
    ) -> Result<Self> {
        let names = (0..states).map(|i| format!("q{i}")).collect();
        let next = (0..states * base as usize)
            .map(|_| rng.gen_range(0..states))
            .collect();
        let stakes = (0..states)
            .map(|_| {
                let mut parts = vec![0u32; base as usize];
                for _ in 0..granularity {
                    parts[rng.gen_range(0..base as usize)] += 1;
                }
                parts
                    .into_iter()
                    .map(|p| BigRational::new(p.into(), granularity.into()))
                    .collect()
            })
            .collect();
        Self::new(base, names, 0, next, stakes, BigRational::one())
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn initial(&self) -> &BigRational {
        &self.initial
    }

    pub fn state_after(&self, word: &[u8]) -> usize {
        word.iter().fold(self.start, |q, &a| {
            self.next[q * self.base as usize + a as usize]
        })
    }

    pub fn stake(&self, state: usize, digit: u8) -> &BigRational {
        &self.stakes[state][digit as usize]
    }

    /// Per-state stake sums must be exactly one and every stake non-negative.
    pub fn fairness_check(&self) -> std::result::Result<(), FairnessViolation> {
        for (q, stakes) in self.stakes.iter().enumerate() {
            let sum: BigRational = stakes.iter().sum();
            let negative = stakes.iter().any(|s| s.is_negative());
            if negative || !sum.is_one() {
                return Err(FairnessViolation {
                    state: self.states[q].clone(),
                    sum,
                    negative,
                });
            }
        }
        Ok(())
    }

    /// `d(w)` exactly.
    pub fn capital_of(&self, word: &[u8]) -> BigRational {
        let b = BigRational::from_integer(self.base.into());
        let mut q = self.start;
        let mut d = self.initial.clone();
        for &a in word {
            d = d * &b * self.stake(q, a);
            q = self.next[q * self.base as usize + a as usize];
        }
        d
    }

    fn check_prefix(&self, prefix: &DigitPrefix) -> Result<()> {
        if prefix.base() != self.base {
            return Err(Error::InvalidArgument(format!(
                "prefix is base {}, martingale is base {}",
                prefix.base(),
                self.base
            )));
        }
        Ok(())
    }

    pub fn capital_exact(&self, prefix: &DigitPrefix) -> Result<Vec<BigRational>> {
        self.check_prefix(prefix)?;
        let b = BigRational::from_integer(self.base.into());
        let mut q = self.start;
        let mut d = self.initial.clone();
        let mut out = Vec::with_capacity(prefix.len() + 1);
        out.push(d.clone());
        for &a in prefix.digits() {
            d = d * &b * self.stake(q, a);
            q = self.next[q * self.base as usize + a as usize];
            out.push(d.clone());
        }
        Ok(out)
    }

    /// `log2 d(w[1..i])` in double precision. Each step adds one rounded
    /// logarithm, so drift stays within about `1e-15 · i`; `1e-9` per step is
    /// the documented bound.
    pub fn capital_log2(&self, prefix: &DigitPrefix) -> Result<Vec<f64>> {
        self.check_prefix(prefix)?;
        let step: Vec<Vec<f64>> = self
            .stakes
            .iter()
            .map(|s| {
                s.iter()
                    .map(|x| (self.base as f64 * x.to_f64().unwrap_or(0.0)).log2())
                    .collect()
            })
            .collect();
        let mut q = self.start;
        let mut acc = log2_rational(&self.initial);
        let mut out = Vec::with_capacity(prefix.len() + 1);
        out.push(acc);
        for &a in prefix.digits() {
            acc += step[q][a as usize];
            q = self.next[q * self.base as usize + a as usize];
            out.push(acc);
        }
        Ok(out)
    }

    /// Exact rationals for prefixes up to [`EXACT_LIMIT`], base-2 logarithms beyond.
    pub fn capital(&self, prefix: &DigitPrefix) -> Result<Capitals> {
        if prefix.len() <= EXACT_LIMIT {
            Ok(Capitals::Exact(self.capital_exact(prefix)?))
        } else {
            Ok(Capitals::Log2(self.capital_log2(prefix)?))
        }
    }
}

/// `log2` of a positive rational, robust to huge numerators and denominators.
pub fn log2_rational(x: &BigRational) -> f64 {
    if !x.is_positive() {
        return f64::NEG_INFINITY;
    }
    fn log2_int(n: &BigInt) -> f64 {
        let bits = n.bits();
        if bits <= 1000 {
            n.to_f64().unwrap_or(f64::INFINITY).log2()
        } else {
            let shift = bits - 64;
            (n >> shift).to_f64().unwrap_or(f64::INFINITY).log2() + shift as f64
        }
    }
    log2_int(x.numer()) - log2_int(x.denom())
}

/// The `h` in the `2^{h(n)}` success bound; any `h(n) = o(n)` diverging.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Growth {
    Sqrt,
    Power(f64),
    Log2Squared,
}

impl Growth {
    pub fn at(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            Growth::Sqrt => n.sqrt(),
            Growth::Power(e) => n.powf(e),
            Growth::Log2Squared => n.log2().powi(2),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Thresholds {
    pub epsilons: Vec<f64>,
    pub h: Growth,
    /// Crossings at or before this length do not count against the verdict.
    pub settle_in: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            epsilons: vec![0.05, 0.1],
            h: Growth::Sqrt,
            settle_in: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuccessRow {
    pub n: usize,
    pub log2_capital: f64,
    /// Per epsilon: `log2 d >= ε n`.
    pub eps_crossed: Vec<bool>,
    pub h_crossed: bool,
}

/// Descriptive long-run shape of the capital; never a verdict.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Trend {
    /// `log2 d` ends at or below `-slope · n`; the slope is reported.
    Decaying {
        slope: f64,
    },
    /// Capital unchanged since the settle-in point.
    Constant,
    Growing {
        slope: f64,
    },
    Mixed,
}

#[derive(Clone, Debug)]
pub struct SuccessProfile {
    pub rows: Vec<SuccessRow>,
    pub epsilons: Vec<f64>,
    /// Per epsilon, the last `n` with `log2 d(w[1..n]) >= ε n`.
    pub last_eps_crossing: Vec<Option<usize>>,
    pub last_h_crossing: Option<usize>,
    pub settle_in: usize,
    pub trend: Trend,
}

impl SuccessProfile {
    /// No crossing of any threshold after the settle-in index.
    pub fn consistent_with_normality(&self) -> bool {
        self.last_eps_crossing
            .iter()
            .chain(std::iter::once(&self.last_h_crossing))
            .all(|c| c.is_none_or(|n| n <= self.settle_in))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,log2_capital");
        for e in &self.epsilons {
            out.push_str(&format!(",crossed_eps_{e}"));
        }
        out.push_str(",crossed_h\n");
        for r in &self.rows {
            out.push_str(&format!("{},{}", r.n, r.log2_capital));
            for c in &r.eps_crossed {
                out.push_str(&format!(",{}", *c as u8));
            }
            out.push_str(&format!(",{}\n", r.h_crossed as u8));
        }
        out
    }
}

/// Tracks `log2 d` along `spec`'s first `n_max` digits against `ε n` and `h(n)`.
/// Every `n` is checked for crossings; rows are reported at `grid` points.
pub fn success_profile(
    m: &FsMartingale,
    spec: &RealSpec,
    n_max: usize,
    grid: &[usize],
    thresholds: &Thresholds,
) -> Result<SuccessProfile> {
    let prefix = numstream::digits(spec, m.base(), n_max)?;
    let logs = m.capital_log2(&prefix)?;
    let mut last_eps = vec![None; thresholds.epsilons.len()];
    let mut last_h = None;
    for (n, &l) in logs.iter().enumerate().skip(1) {
        for (slot, &e) in last_eps.iter_mut().zip(&thresholds.epsilons) {
            if l >= e * n as f64 {
                *slot = Some(n);
            }
        }
        if l >= thresholds.h.at(n) {
            last_h = Some(n);
        }
    }
    let rows = grid
        .iter()
        .filter(|&&n| n >= 1 && n <= n_max)
        .map(|&n| SuccessRow {
            n,
            log2_capital: logs[n],
            eps_crossed: thresholds
                .epsilons
                .iter()
                .map(|&e| logs[n] >= e * n as f64)
                .collect(),
            h_crossed: logs[n] >= thresholds.h.at(n),
        })
        .collect();
    let settle = thresholds.settle_in.min(n_max);
    let tail = &logs[settle..];
    let trend = if tail.windows(2).all(|w| w[0] == w[1]) {
        Trend::Constant
    } else {
        let slope = logs[n_max] / n_max.max(1) as f64;
        if slope < -1e-3 {
            Trend::Decaying { slope: -slope }
        } else if slope > 1e-3 {
            Trend::Growing { slope }
        } else {
            Trend::Mixed
        }
    };
    Ok(SuccessProfile {
        rows,
        epsilons: thresholds.epsilons.clone(),
        last_eps_crossing: last_eps,
        last_h_crossing: last_h,
        settle_in: thresholds.settle_in,
        trend,
    })
}

impl fmt::Display for FsMartingale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "base={} states={} start={} capital={}",
            self.base,
            self.states.len(),
            self.states[self.start],
            ratio::format_rational(&self.initial)
        )?;
        for (q, name) in self.states.iter().enumerate() {
            for a in 0..self.base as usize {
                writeln!(
                    f,
                    "{name} {a} -> {}",
                    self.states[self.next[q * self.base as usize + a]]
                )?;
            }
        }
        for (name, stakes) in self.states.iter().zip(&self.stakes) {
            let parts: Vec<String> = stakes.iter().map(ratio::format_rational).collect();
            writeln!(f, "{name} : {}", parts.join(","))?;
        }
        Ok(())
    }
}

pub fn parse_martingale(text: &str) -> Result<FsMartingale> {
    let raw = parse_table(text)?;
    if let Some(key) = raw
        .fields
        .keys()
        .find(|k| !["base", "states", "start", "capital"].contains(k))
    {
        return Err(Error::parse(
            raw.header_line,
            format!("unknown header field `{key}`"),
        ));
    }
    let initial = match raw.fields.get("capital") {
        Some(c) => {
            ratio::parse_rational(c).map_err(|e| Error::parse(raw.header_line, e.to_string()))?
        }
        None => BigRational::one(),
    };
    let mut next = Vec::with_capacity(raw.cells.len());
    for cell in &raw.cells {
        let (line, target, rest) = cell.expect("checked complete");
        if rest.is_some() {
            return Err(Error::parse(line, "martingale transitions carry no output"));
        }
        next.push(target);
    }
    let mut stakes: Vec<Option<Vec<BigRational>>> = vec![None; raw.states.len()];
    for &(line, body) in &raw.other {
        let (name, list) = body
            .split_once(':')
            .ok_or_else(|| Error::parse(line, "expected `<state> : <stakes>`"))?;
        let name = name.trim();
        let q = raw
            .states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::parse(line, format!("unknown state `{name}`")))?;
        let values = list
            .split(',')
            .map(|t| ratio::parse_rational(t).map_err(|e| Error::parse(line, e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != raw.base as usize {
            return Err(Error::parse(
                line,
                format!("expected {} stakes, got {}", raw.base, values.len()),
            ));
        }
        if stakes[q].replace(values).is_some() {
            return Err(Error::parse(line, format!("duplicate stakes for `{name}`")));
        }
    }
    let stakes = stakes
        .into_iter()
        .zip(&raw.states)
        .map(|(s, name)| {
            s.ok_or_else(|| Error::parse(raw.header_line, format!("state `{name}` has no stakes")))
        })
        .collect::<Result<Vec<_>>>()?;
    FsMartingale::new(raw.base, raw.states, raw.start, next, stakes, initial)
        .map_err(|e| Error::parse(raw.header_line, e.to_string()))
}

impl FromStr for FsMartingale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_martingale(s)
    }
}
