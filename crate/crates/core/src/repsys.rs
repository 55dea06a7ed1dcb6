//! Representation systems `f: Σ_b^{<ω} → ℚ` and the complexities they induce.
//!
//! `C^f_n(x)` is the length of the shortest `σ` with `|f(σ) - x| < b^-n`,
//! capped at `n + 1`; `C^f_{n,D}(x)` replaces the length by the transducer
//! input cost `C_D(σ)`.
//!
//! Declarations, as accepted by [`parse_repsys`]:
//!
//! ```text
//! identity
//! affine:<q>:<r>:<inner>
//! complement:<inner>
//! compose:<transducer file>:<inner>
//! tabular:<table file>:<inner>
//! above:<stage>:<inner>
//! ```
//!
//! File names may not contain `:`; stages are at most [`MAX_PARSED_STAGE`].

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::numstream::{self, check_base, Nearness, RealSpec};
use crate::ratio;
use crate::search::{self, ComplexityEntry};
use crate::textfmt;
use crate::transducer::Transducer;

/// Stage evaluator `g(n, σ)` of an upper semi-computable system.
pub type StageFn = Arc<dyn Fn(usize, &[u8]) -> Result<BigRational> + Send + Sync>;

#[derive(Clone)]
pub enum Kind {
    Identity,
    Affine {
        q: BigRational,
        r: BigRational,
        inner: Box<RepSystem>,
    },
    Composed {
        inner: Box<RepSystem>,
        d: Arc<Transducer>,
    },
    Tabular {
        overrides: Arc<HashMap<Vec<u8>, BigRational>>,
        fallback: Box<RepSystem>,
    },
    /// Evaluated as `g(stage, σ)` after checking `g(i, σ) >= g(i + 1, σ)` for `i < stage`.
    Staged {
        g: StageFn,
        stage: usize,
    },
    /// `f(σ) + b^-stage`; the stages `f + b^-i` decrease by construction.
    Above {
        inner: Box<RepSystem>,
        stage: usize,
    },
}

#[derive(Clone)]
pub struct RepSystem {
    base: u32,
    kind: Kind,
    name: String,
}

impl fmt::Debug for RepSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RepSystem")
            .field("base", &self.base)
            .field("name", &self.name)
            .finish()
    }
}

impl fmt::Display for RepSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl RepSystem {
    /// `σ ↦ 0.σ`.
    pub fn identity(base: u32) -> Result<Self> {
        check_base(base)?;
        Ok(RepSystem {
            base,
            kind: Kind::Identity,
            name: "identity".into(),
        })
    }

    /// `σ ↦ q·f(σ) + r`.
    pub fn affine(q: BigRational, r: BigRational, inner: RepSystem) -> Self {
        let name = format!(
            "affine:{}:{}:{}",
            ratio::format_rational(&q),
            ratio::format_rational(&r),
            inner.name
        );
        RepSystem {
            base: inner.base,
            kind: Kind::Affine {
                q,
                r,
                inner: Box::new(inner),
            },
            name,
        }
    }

    /// `σ ↦ 1 - f(σ)`.
    pub fn complement(inner: RepSystem) -> Self {
        let name = format!("complement:{}", inner.name);
        let mut g = Self::affine(-BigRational::one(), BigRational::one(), inner);
        g.name = name;
        g
    }

    /// `σ ↦ f(D(σ))`.
    pub fn compose(f: RepSystem, d: Transducer, label: &str) -> Result<Self> {
        if f.base != d.base() {
            return Err(Error::BaseMismatch {
                source_base: d.base(),
                requested: f.base,
            });
        }
        Ok(RepSystem {
            base: f.base,
            name: format!("compose:{label}:{}", f.name),
            kind: Kind::Composed {
                inner: Box::new(f),
                d: Arc::new(d),
            },
        })
    }

    /// `f` with a finite table of overridden values.
    pub fn tabular(
        overrides: HashMap<Vec<u8>, BigRational>,
        fallback: RepSystem,
        label: &str,
    ) -> Result<Self> {
        let base = fallback.base;
        if overrides.keys().flatten().any(|&d| d as u32 >= base) {
            return Err(Error::InvalidArgument(format!(
                "table key has a digit not below {base}"
            )));
        }
        Ok(RepSystem {
            base,
            name: format!("tabular:{label}:{}", fallback.name),
            kind: Kind::Tabular {
                overrides: Arc::new(overrides),
                fallback: Box::new(fallback),
            },
        })
    }

    pub fn staged(base: u32, g: StageFn, stage: usize, label: &str) -> Result<Self> {
        check_base(base)?;
        Ok(RepSystem {
            base,
            kind: Kind::Staged { g, stage },
            name: format!("staged:{stage}:{label}"),
        })
    }

    /// Staged approximation `g(i, σ) = f(σ) + b^-i` of `f` from above.
    pub fn from_above(inner: RepSystem, stage: usize) -> Self {
        let base = inner.base;
        let name = format!("above:{stage}:{}", inner.name);
        RepSystem {
            base,
            kind: Kind::Above {
                inner: Box::new(inner),
                stage,
            },
            name,
        }
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, Kind::Identity)
    }

    pub fn eval(&self, sigma: &[u8]) -> Result<BigRational> {
        match &self.kind {
            Kind::Identity => {
                if let Some(&d) = sigma.iter().find(|&&d| d as u32 >= self.base) {
                    return Err(Error::InvalidArgument(format!(
                        "digit {d} is not below base {}",
                        self.base
                    )));
                }
                Ok(ratio::fraction_value(sigma, self.base))
            }
            Kind::Affine { q, r, inner } => Ok(q * inner.eval(sigma)? + r),
            Kind::Composed { inner, d } => inner.eval(&d.run(sigma)),
            Kind::Tabular {
                overrides,
                fallback,
            } => match overrides.get(sigma) {
                Some(v) => Ok(v.clone()),
                None => fallback.eval(sigma),
            },
            Kind::Staged { g, stage } => {
                let mut prev = g(0, sigma)?;
                for i in 1..=*stage {
                    let cur = g(i, sigma)?;
                    if cur > prev {
                        return Err(Error::Invariant(format!(
                            "{}: stage {i} value {} exceeds stage {} value {} at {}",
                            self.name,
                            ratio::format_rational(&cur),
                            i - 1,
                            ratio::format_rational(&prev),
                            textfmt::format_digit_string(sigma, self.base)
                        )));
                    }
                    prev = cur;
                }
                Ok(prev)
            }
            Kind::Above { inner, stage } => Ok(inner.eval(sigma)? + ratio::ulp(self.base, *stage)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub budget: u128,
    /// For the identity system, test only the two lattice points around `x`
    /// at each length instead of enumerating.
    pub prune_identity: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: search::DEFAULT_BUDGET,
            prune_identity: true,
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "precision n must be at least 1".into(),
        ));
    }
    Ok(())
}

/// `C^f_n(x)`.
pub fn c_f_n(spec: &RealSpec, f: &RepSystem, n: usize) -> Result<ComplexityEntry> {
    c_f_n_with(spec, f, n, &SearchOptions::default())
}

pub fn c_f_n_with(
    spec: &RealSpec,
    f: &RepSystem,
    n: usize,
    opts: &SearchOptions,
) -> Result<ComplexityEntry> {
    check_n(n)?;
    let base = f.base;
    let near = Nearness::with_precision(spec, base, n)?;
    if opts.prune_identity && f.is_identity() {
        // The closest length-L strings to x are floor(b^L x) and its successor.
        let x = numstream::digits(spec, base, n)?;
        for len in 0..=n {
            let mut sigma = x.digits()[..len].to_vec();
            if near.test(&ratio::fraction_value(&sigma, base))? {
                return Ok(ComplexityEntry::from_search(n, Some(len)));
            }
            if search::increment(&mut sigma, base)
                && near.test(&ratio::fraction_value(&sigma, base))?
            {
                return Ok(ComplexityEntry::from_search(n, Some(len)));
            }
        }
        return Ok(ComplexityEntry::from_search(n, None));
    }
    search::check_budget(base, n, opts.budget)?;
    let found = search::shortest(base, n, |s| near.test(&f.eval(s)?))?;
    Ok(ComplexityEntry::from_search(n, found))
}

fn check_same_base(f: &RepSystem, d: &Transducer) -> Result<()> {
    if f.base != d.base() {
        return Err(Error::BaseMismatch {
            source_base: d.base(),
            requested: f.base,
        });
    }
    Ok(())
}

/// `C^f_{n,D}(x)` by enumerating transducer inputs.
pub fn c_f_nd(spec: &RealSpec, f: &RepSystem, d: &Transducer, n: usize) -> Result<ComplexityEntry> {
    c_f_nd_with_budget(spec, f, d, n, search::DEFAULT_BUDGET)
}

pub fn c_f_nd_with_budget(
    spec: &RealSpec,
    f: &RepSystem,
    d: &Transducer,
    n: usize,
    budget: u128,
) -> Result<ComplexityEntry> {
    check_n(n)?;
    check_same_base(f, d)?;
    search::check_budget(f.base, n, budget)?;
    let near = Nearness::with_precision(spec, f.base, n)?;
    let found = search::shortest(f.base, n, |p| near.test(&f.eval(&d.run(p))?))?;
    Ok(ComplexityEntry::from_search(n, found))
}

/// `C^f_{n,D}(x)` from its definition: the least `C_D(σ)` over outputs `σ`
/// near `x`. Only outputs of inputs of length `<= n` can have `C_D(σ) <= n`,
/// so those are the candidates.
pub fn c_f_nd_by_outputs(
    spec: &RealSpec,
    f: &RepSystem,
    d: &Transducer,
    n: usize,
    budget: u128,
) -> Result<ComplexityEntry> {
    check_n(n)?;
    check_same_base(f, d)?;
    search::check_budget(f.base, n, budget)?;
    let near = Nearness::with_precision(spec, f.base, n)?;
    let mut outputs = HashSet::new();
    for len in 0..=n {
        search::for_each_string(f.base, len, |p| {
            outputs.insert(d.run(p));
            true
        });
    }
    let mut best: Option<usize> = None;
    for sigma in &outputs {
        if near.test(&f.eval(sigma)?)? {
            let cost = d
                .c_d(sigma)
                .finite()
                .ok_or_else(|| Error::Invariant("an observed output has no input".into()))?;
            best = Some(best.map_or(cost, |b| b.min(cost)));
        }
    }
    Ok(ComplexityEntry::from_search(n, best))
}

/// Complexity ratios `C/n` along a range of precisions.
#[derive(Clone, Debug)]
pub struct RatioProfile {
    pub label: String,
    pub entries: Vec<ComplexityEntry>,
    pub epsilons: Vec<f64>,
    /// Per epsilon, the largest `n` with `C < n(1 - ε)`.
    pub last_violation: Vec<Option<usize>>,
}

impl RatioProfile {
    fn new(label: String, entries: Vec<ComplexityEntry>, epsilons: &[f64]) -> Self {
        let last_violation = epsilons
            .iter()
            .map(|&e| {
                entries
                    .iter()
                    .filter(|c| (c.value as f64) < c.n as f64 * (1.0 - e))
                    .map(|c| c.n)
                    .max()
            })
            .collect();
        RatioProfile {
            label,
            entries,
            epsilons: epsilons.to_vec(),
            last_violation,
        }
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.entries.iter().map(ComplexityEntry::ratio).collect()
    }

    /// No violation of any configured epsilon beyond `settle_in`.
    pub fn clean_after(&self, settle_in: usize) -> bool {
        self.last_violation
            .iter()
            .all(|v| v.is_none_or(|n| n <= settle_in))
    }

    /// Columns `label,n,value,cap_hit,ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,n,value,cap_hit,ratio\n");
        for c in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.label,
                c.n,
                c.value,
                c.cap_hit as u8,
                c.ratio()
            ));
        }
        out
    }
}

pub fn weak_profile(
    spec: &RealSpec,
    f: &RepSystem,
    ns: &[usize],
    epsilons: &[f64],
) -> Result<RatioProfile> {
    let entries = ns
        .iter()
        .map(|&n| c_f_n(spec, f, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(RatioProfile::new(f.name.clone(), entries, epsilons))
}

/// One profile per named transducer.
pub fn strong_profile(
    spec: &RealSpec,
    f: &RepSystem,
    ds: &[(String, Transducer)],
    ns: &[usize],
    epsilons: &[f64],
) -> Result<Vec<RatioProfile>> {
    ds.iter()
        .map(|(label, d)| {
            let entries = ns
                .iter()
                .map(|&n| c_f_nd(spec, f, d, n))
                .collect::<Result<Vec<_>>>()?;
            Ok(RatioProfile::new(
                format!("{}|{label}", f.name),
                entries,
                epsilons,
            ))
        })
        .collect()
}

/// Parses `σ  p/q` lines; `-` names the empty string.
pub fn parse_override_table(text: &str, base: u32) -> Result<HashMap<Vec<u8>, BigRational>> {
    let mut table = HashMap::new();
    for (line, body) in textfmt::content_lines(text) {
        let mut parts = body.split_whitespace();
        let (Some(sigma), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(line, "expected `<digits> <p/q>`"));
        };
        let sigma = textfmt::parse_digit_string(sigma, base, line)?;
        let value = ratio::parse_rational(value).map_err(|e| Error::parse(line, e.to_string()))?;
        if table.insert(sigma, value).is_some() {
            return Err(Error::parse(line, "duplicate entry"));
        }
    }
    Ok(table)
}

pub fn format_override_table(table: &HashMap<Vec<u8>, BigRational>, base: u32) -> String {
    let mut rows: Vec<_> = table.iter().collect();
    rows.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(b.0)));
    rows.iter()
        .map(|(s, v)| {
            format!(
                "{}  {}\n",
                textfmt::format_digit_string(s, base),
                ratio::format_rational(v)
            )
        })
        .collect()
}

/// Resolves the file references inside a declaration.
pub trait Resources {
    fn transducer(&self, name: &str) -> Result<Transducer>;
    fn table(&self, name: &str, base: u32) -> Result<HashMap<Vec<u8>, BigRational>>;
}

/// Reads references as file paths relative to a directory.
pub struct FileResources<'a>(pub &'a Path);

impl Resources for FileResources<'_> {
    fn transducer(&self, name: &str) -> Result<Transducer> {
        std::fs::read_to_string(self.0.join(name))?.parse()
    }

    fn table(&self, name: &str, base: u32) -> Result<HashMap<Vec<u8>, BigRational>> {
        parse_override_table(&std::fs::read_to_string(self.0.join(name))?, base)
    }
}

/// Largest `above:` stage a declaration may request; each evaluation builds
/// a `b^stage` denominator.
pub const MAX_PARSED_STAGE: usize = 1 << 16;

/// Parses a declaration, resolving file names against the working directory.
pub fn parse_repsys(text: &str, base: u32) -> Result<RepSystem> {
    parse_repsys_with(text, base, &FileResources(Path::new(".")))
}

pub fn parse_repsys_with(text: &str, base: u32, res: &dyn Resources) -> Result<RepSystem> {
    let bad =
        |msg: String| Error::InvalidArgument(format!("representation system `{text}`: {msg}"));
    let text = text.trim();
    if text == "identity" {
        return RepSystem::identity(base);
    }
    let (head, rest) = text
        .split_once(':')
        .ok_or_else(|| bad("unknown kind".into()))?;
    let split = |s: &str| -> Result<(String, String)> {
        s.split_once(':')
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .ok_or_else(|| bad(format!("`{head}` needs a parameter and an inner system")))
    };
    match head {
        "complement" => Ok(RepSystem::complement(parse_repsys_with(rest, base, res)?)),
        "affine" => {
            let (q, rest) = split(rest)?;
            let (r, inner) = split(&rest)?;
            let q = ratio::parse_rational(&q)?;
            let r = ratio::parse_rational(&r)?;
            Ok(RepSystem::affine(
                q,
                r,
                parse_repsys_with(&inner, base, res)?,
            ))
        }
        "compose" => {
            let (file, inner) = split(rest)?;
            let d = res.transducer(&file)?;
            RepSystem::compose(parse_repsys_with(&inner, base, res)?, d, &file)
        }
        "tabular" => {
            let (file, inner) = split(rest)?;
            let table = res.table(&file, base)?;
            RepSystem::tabular(table, parse_repsys_with(&inner, base, res)?, &file)
        }
        "above" => {
            let (stage, inner) = split(rest)?;
            let stage = stage
                .parse()
                .ok()
                .filter(|&s: &usize| s <= MAX_PARSED_STAGE)
                .ok_or_else(|| bad(format!("stage `{stage}` is not in 0..={MAX_PARSED_STAGE}")))?;
            Ok(RepSystem::from_above(
                parse_repsys_with(&inner, base, res)?,
                stage,
            ))
        }
        _ => Err(bad(format!("unknown kind `{head}`"))),
    }
}

/// `floor(b^n · f(σ))`, the `n`-digit truncation of `f(σ)`.
pub fn truncation(value: &BigRational, base: u32, n: usize) -> BigInt {
    ratio::scaled_floor(value, base, n)
}

/// Whether `n` digits of `f(σ)` could start with `W = word` after at most one
/// lattice step.
pub fn within_one_step(value: &BigRational, word: &[u8], base: u32) -> bool {
    let w = BigInt::from(ratio::digits_to_uint(word, base));
    let t = truncation(value, base, word.len());
    let diff = w - t;
    diff >= -BigInt::one() && diff <= BigInt::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn brute() -> SearchOptions {
        SearchOptions {
            prune_identity: false,
            ..SearchOptions::default()
        }
    }

    #[test]
    fn evaluations() {
        let id3 = RepSystem::identity(3).unwrap();
        assert_eq!(id3.eval(&[1, 1]).unwrap(), q(4, 9));
        let g =
            RepSystem::compose(id3.clone(), Transducer::doubling(3, 1).unwrap(), "dbl").unwrap();
        assert_eq!(g.eval(&[1]).unwrap(), q(4, 9));
        let id2 = RepSystem::identity(2).unwrap();
        let a = RepSystem::affine(q(2, 1), q(0, 1), id2.clone());
        assert_eq!(a.eval(&[1]).unwrap(), q(1, 1));
        let c = RepSystem::complement(id3.clone());
        assert_eq!(c.eval(&[1, 1]).unwrap(), q(5, 9));
        assert!(id3.eval(&[3]).is_err());
        assert!(RepSystem::compose(id2, Transducer::identity(3).unwrap(), "i").is_err());
    }

    #[test]
    fn complexity_examples() {
        let half = RealSpec::rational(1, 2).unwrap();
        let id3 = RepSystem::identity(3).unwrap();
        for opts in [SearchOptions::default(), brute()] {
            assert_eq!(c_f_n_with(&half, &id3, 7, &opts).unwrap().value, 7);
            let id2 = RepSystem::identity(2).unwrap();
            assert_eq!(c_f_n_with(&half, &id2, 4, &opts).unwrap().value, 1);
        }

        let third = RealSpec::rational(1, 3).unwrap();
        let table = HashMap::from([(vec![], q(1, 3))]);
        let t = RepSystem::tabular(table, RepSystem::identity(10).unwrap(), "t").unwrap();
        assert_eq!(c_f_n(&third, &t, 5).unwrap().value, 0);
    }

    #[test]
    fn transducer_complexity_examples() {
        let half = RealSpec::rational(1, 2).unwrap();
        let id3 = RepSystem::identity(3).unwrap();
        let dbl = Transducer::doubling(3, 1).unwrap();
        assert_eq!(c_f_nd(&half, &id3, &dbl, 10).unwrap().value, 5);
        let g = RepSystem::compose(id3.clone(), dbl.clone(), "dbl").unwrap();
        assert_eq!(c_f_n(&half, &g, 10).unwrap().value, 5);

        let silent = Transducer::silent(3).unwrap();
        let e = c_f_nd(&half, &id3, &silent, 6).unwrap();
        assert_eq!((e.value, e.cap_hit), (7, true));

        let copy = Transducer::identity(3).unwrap();
        for n in 1..=7 {
            assert_eq!(
                c_f_nd(&half, &id3, &copy, n).unwrap(),
                c_f_n(&half, &id3, n).unwrap()
            );
        }
    }

    #[test]
    fn budgets_are_explicit() {
        let half = RealSpec::rational(1, 2).unwrap();
        let f = RepSystem::affine(q(1, 1), q(0, 1), RepSystem::identity(10).unwrap());
        assert!(matches!(
            c_f_n(&half, &f, 9),
            Err(Error::BudgetExceeded { .. })
        ));
        // The pruned identity path needs no enumeration.
        let id = RepSystem::identity(10).unwrap();
        assert_eq!(
            c_f_n(&RealSpec::rational(1, 3).unwrap(), &id, 30)
                .unwrap()
                .value,
            30
        );
    }

    #[test]
    fn compose_matches_definitional_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..40 {
            let base = rng.gen_range(2..=3);
            let states = rng.gen_range(1..=4);
            let d = Transducer::random(&mut rng, base, states, 2).unwrap();
            let f = RepSystem::affine(
                q(rng.gen_range(1..=3), rng.gen_range(1..=3)),
                q(rng.gen_range(-1..=1), 4),
                RepSystem::identity(base).unwrap(),
            );
            let x = RealSpec::rational(rng.gen_range(0..7), 7).unwrap();
            let n = rng.gen_range(1..=6);
            let g = RepSystem::compose(f.clone(), d.clone(), "d").unwrap();
            let a = c_f_n(&x, &g, n).unwrap();
            let b = c_f_nd(&x, &f, &d, n).unwrap();
            let c = c_f_nd_by_outputs(&x, &f, &d, n, search::DEFAULT_BUDGET).unwrap();
            assert_eq!(a, b);
            assert_eq!(b, c);
        }
    }

    #[test]
    fn digit_shift_relation() {
        let x = RealSpec::champernowne(2).unwrap();
        let f = RepSystem::identity(2).unwrap();
        for j in 1..=2 {
            let qj = ratio::ulp(2, j);
            let shifted = numstream::scale(&qj, &x).unwrap();
            let g = RepSystem::affine(qj, q(0, 1), f.clone());
            for n in j + 1..=12 {
                let lhs = c_f_n(&shifted, &g, n).unwrap();
                let rhs = c_f_n(&x, &f, n - j).unwrap();
                if !rhs.cap_hit {
                    assert_eq!(lhs.value, rhs.value, "j={j} n={n}");
                }
            }
        }
    }

    #[test]
    fn staged_systems() {
        let id = RepSystem::identity(2).unwrap();
        let above = RepSystem::from_above(id.clone(), 5);
        assert_eq!(above.eval(&[1]).unwrap(), q(1, 2) + q(1, 32));
        let inner = id.clone();
        let g: StageFn = Arc::new(move |i, s| Ok(inner.eval(s)? + ratio::ulp(2, i)));
        let checked = RepSystem::staged(2, g, 5, "checked").unwrap();
        crate::search::for_each_string(2, 6, |s| {
            assert_eq!(above.eval(s).unwrap(), checked.eval(s).unwrap());
            true
        });

        let rising: StageFn = Arc::new(|i, _| Ok(q(i as i64, 1)));
        let bad = RepSystem::staged(2, rising, 3, "rising").unwrap();
        assert!(matches!(bad.eval(&[0]), Err(Error::Invariant(_))));
        let x = RealSpec::rational(1, 3).unwrap();
        assert!(matches!(c_f_n(&x, &bad, 3), Err(Error::Invariant(_))));

        // The final stage drives complexity: within b^-6 of 1/2, 0.1 + 2^-6 qualifies.
        let half = RealSpec::rational(1, 2).unwrap();
        assert_eq!(c_f_n(&half, &above, 4).unwrap().value, 1);
    }

    #[test]
    fn profiles() {
        let half = RealSpec::rational(1, 2).unwrap();
        let id3 = RepSystem::identity(3).unwrap();
        let ns: Vec<usize> = (4..=10).collect();
        let weak = weak_profile(&half, &id3, &ns, &[0.1]).unwrap();
        assert!(weak.ratios().iter().all(|&r| r == 1.0));
        assert!(weak.clean_after(0));
        let ds = vec![("dbl".to_string(), Transducer::doubling(3, 1).unwrap())];
        let strong = strong_profile(&half, &id3, &ds, &ns, &[0.1]).unwrap();
        for (c, r) in strong[0].entries.iter().zip(strong[0].ratios()) {
            assert!((r - 0.5).abs() <= 0.5 / c.n as f64 + 1e-12, "{r}");
        }
        assert_eq!(strong[0].last_violation, vec![Some(10)]);

        // A table holding the answer makes every ratio zero.
        let third = RealSpec::rational(1, 3).unwrap();
        let table = HashMap::from([(vec![], q(1, 3))]);
        let t = RepSystem::tabular(table, RepSystem::identity(2).unwrap(), "t").unwrap();
        let p = weak_profile(&third, &t, &[4, 8, 12], &[0.1]).unwrap();
        assert_eq!(p.ratios(), vec![0.0; 3]);
        assert!(p.to_csv().starts_with("label,n,value,cap_hit,ratio\n"));
    }

    #[test]
    fn declarations() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("dbl.txt"),
            Transducer::doubling(3, 1).unwrap().to_string(),
        )
        .unwrap();
        std::fs::write(dir.path().join("tab.txt"), "# overrides\n-  1/2\n12  1/3\n").unwrap();
        let res = FileResources(dir.path());
        for text in [
            "identity",
            "complement:identity",
            "affine:2/1:-1/3:identity",
            "compose:dbl.txt:identity",
            "tabular:tab.txt:complement:identity",
            "above:4:compose:dbl.txt:identity",
        ] {
            let f = parse_repsys_with(text, 3, &res).unwrap();
            assert_eq!(f.name(), text);
        }
        let t = parse_repsys_with("tabular:tab.txt:identity", 3, &res).unwrap();
        assert_eq!(t.eval(&[]).unwrap(), q(1, 2));
        assert_eq!(t.eval(&[1, 2]).unwrap(), q(1, 3));
        assert_eq!(t.eval(&[2]).unwrap(), q(2, 3));
        for bad in [
            "",
            "idnetity",
            "affine:2:identity",
            "compose:missing.txt:identity",
            "above:x:identity",
            "above:65537:identity",
        ] {
            assert!(parse_repsys_with(bad, 3, &res).is_err(), "{bad}");
        }
        assert!(matches!(
            parse_override_table("1 1/2\n1 1/3\n", 2),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_override_table("1\n", 2),
            Err(Error::Parse { line: 1, .. })
        ));
        let table = parse_override_table("-  1/2\n10  1/3\n", 2).unwrap();
        assert_eq!(
            parse_override_table(&format_override_table(&table, 2), 2).unwrap(),
            table
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn pruning_agrees_with_enumeration(
            base in 2u32..=4,
            num in 0i64..50,
            den in 1i64..50,
            n in 1usize..=7,
        ) {
            prop_assume!(num < den);
            let x = RealSpec::rational(num, den).unwrap();
            let id = RepSystem::identity(base).unwrap();
            let fast = c_f_n_with(&x, &id, n, &SearchOptions::default()).unwrap();
            let slow = c_f_n_with(&x, &id, n, &brute()).unwrap();
            prop_assert_eq!(fast, slow);
            prop_assert!(fast.value <= n + 1);
        }

        #[test]
        fn complement_transports_distance(
            digits in prop::collection::vec(0u8..10, 0..12),
            num in 1i64..30,
        ) {
            let id = RepSystem::identity(10).unwrap();
            let g = RepSystem::complement(id.clone());
            let x = q(num, 31);
            let one = q(1, 1);
            let lhs = (id.eval(&digits).unwrap() - &x).abs();
            let rhs = (g.eval(&digits).unwrap() - (one - &x)).abs();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
