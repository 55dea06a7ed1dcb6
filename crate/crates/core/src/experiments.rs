//! Canned experiments that check, at finite scale, the identities and
//! separations the theory predicts. Each returns exact evidence per check.

use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blockstats::{self, approx};
use crate::error::{Error, Result};
use crate::numstream::{self, RealSpec};
use crate::ratio;
use crate::repsys::{self, RepSystem};
use crate::search::{self, ComplexityEntry};
use crate::transducer::Transducer;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub label: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentResult {
    pub name: String,
    pub params: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl ExperimentResult {
    fn new(name: &str, params: Vec<(&str, String)>) -> Self {
        ExperimentResult {
            name: name.into(),
            params: params.into_iter().map(|(k, v)| (k.into(), v)).collect(),
            checks: Vec::new(),
        }
    }

    pub fn check(
        &mut self,
        label: impl Into<String>,
        expected: impl Into<String>,
        observed: impl Into<String>,
        pass: bool,
    ) {
        self.checks.push(Check {
            label: label.into(),
            expected: expected.into(),
            observed: observed.into(),
            pass,
        });
    }

    /// Pass iff every check passes.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("experiment {}\n", self.name);
        for (k, v) in &self.params {
            let _ = writeln!(out, "  {k} = {v}");
        }
        for c in &self.checks {
            let _ = writeln!(
                out,
                "  [{}] {}: expected {}, observed {}",
                if c.pass { "pass" } else { "FAIL" },
                c.label,
                c.expected,
                c.observed
            );
        }
        let _ = writeln!(
            out,
            "verdict: {} ({}/{} checks)",
            if self.passed() { "pass" } else { "FAIL" },
            self.checks.iter().filter(|c| c.pass).count(),
            self.checks.len()
        );
        out
    }

    /// Columns `experiment,check,expected,observed,pass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("experiment,check,expected,observed,pass\n");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                csv_field(&self.name),
                csv_field(&c.label),
                csv_field(&c.expected),
                csv_field(&c.observed),
                c.pass as u8
            );
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn show(e: &ComplexityEntry) -> String {
    if e.cap_hit {
        format!("{} (cap)", e.value)
    } else {
        e.value.to_string()
    }
}

/// `x = (b-2)/(b-1)`, identity `f` and the transducer doubling digit `b - 2`:
/// `C^f_n(x) = n` while `C^f_{n,D}(x)` is about `n / 2`.
pub fn run_separation_example(base: u32, n_max: usize) -> Result<ExperimentResult> {
    if base < 3 {
        return Err(Error::InvalidArgument(format!(
            "the separation needs base > 2, got {base}"
        )));
    }
    if n_max < 4 {
        return Err(Error::InvalidArgument("n_max must be at least 4".into()));
    }
    search::check_budget(base, n_max, search::DEFAULT_BUDGET)?;
    let x = RealSpec::rational(base - 2, base - 1)?;
    let f = RepSystem::identity(base)?;
    let d = Transducer::doubling(base, (base - 2) as u8)?;
    let mut res = ExperimentResult::new(
        "separation",
        vec![
            ("base", base.to_string()),
            ("n_max", n_max.to_string()),
            ("x", x.to_string()),
            ("D", format!("doubling digit {}", base - 2)),
        ],
    );
    for n in 4..=n_max {
        let weak = repsys::c_f_n(&x, &f, n)?;
        res.check(
            format!("C^f_{n}(x)"),
            n.to_string(),
            show(&weak),
            weak.value == n && !weak.cap_hit,
        );
        let strong = repsys::c_f_nd(&x, &f, &d, n)?;
        let lo = n.div_ceil(2);
        res.check(
            format!("C^f_{{{n},D}}(x)"),
            format!("{lo} or {}", lo + 1),
            show(&strong),
            !strong.cap_hit && (strong.value == lo || strong.value == lo + 1),
        );
    }
    Ok(res)
}

/// Discrepancy threshold for `z` in the interleave experiment.
pub fn interleave_threshold(n: usize) -> f64 {
    if n >= 100_000 {
        0.02
    } else {
        0.05
    }
}

/// Masks binary Champernowne `z` to its odd-position bits `x` and
/// even-position bits `y`, and checks that the masks are far from normal
/// while `z` is close.
pub fn run_interleave_experiment(n: usize) -> Result<ExperimentResult> {
    if n < 10_000 {
        return Err(Error::InvalidArgument(format!(
            "the interleave experiment needs n >= 10000, got {n}"
        )));
    }
    let z = RealSpec::champernowne(2)?;
    let (x, y) = numstream::interleave_split(&z);
    let threshold = interleave_threshold(n);
    let mut res = ExperimentResult::new(
        "interleave",
        vec![
            ("n", n.to_string()),
            ("z", z.to_string()),
            ("x", x.to_string()),
            ("y", y.to_string()),
            ("z_threshold", threshold.to_string()),
        ],
    );
    for (label, spec) in [("x", &x), ("y", &y)] {
        let r = blockstats::normality_profile(spec, 2, 1, &[n])?;
        let d = r.at(1, n).expect("grid point");
        res.check(
            format!("{label} k=1 discrepancy at n={n}"),
            ">= 0.2",
            format!("{} ({:.6})", ratio::format_rational(d), approx(d)),
            approx(d) >= 0.2,
        );
    }
    let rz = blockstats::normality_profile(&z, 2, 2, &[n])?;
    for k in 1..=2 {
        let d = rz.at(k, n).expect("grid point");
        res.check(
            format!("z k={k} discrepancy at n={n}"),
            format!("< {threshold}"),
            format!("{} ({:.6})", ratio::format_rational(d), approx(d)),
            approx(d) < threshold,
        );
    }
    let zd = numstream::digits(&z, 2, n)?;
    let xd = numstream::digits(&x, 2, n)?;
    let yd = numstream::digits(&y, 2, n)?;
    let positionwise = xd
        .digits()
        .iter()
        .zip(yd.digits())
        .zip(zd.digits())
        .all(|((a, b), c)| a + b == *c);
    let exact = xd.value() + yd.value() == zd.value();
    res.check(
        format!("bits of x plus bits of y reconstruct z over {n} positions"),
        "equal",
        if positionwise && exact {
            "equal"
        } else {
            "different"
        },
        positionwise && exact,
    );
    Ok(res)
}

/// A rational standing in for `x` in algebraic identities: exact when known,
/// otherwise the `n`-digit truncation.
fn representative(spec: &RealSpec, base: u32, n: usize) -> Result<BigRational> {
    match spec.exact_value() {
        Some(v) => Ok(v),
        None => Ok(numstream::digits(spec, base, n)?.value()),
    }
}

/// Complement and digit-shift transport for the identity system of `base`.
///
/// Complement: `|f(σ) - x| = |g(σ) - (1 - x)|` on sampled `σ` for
/// `g = 1 - f`, and `C^f_m(x) = C^g_m(1 - x)` for `m <= n`.
/// Shift by `q = b^-j`: `C^{qf}_m(qx) = C^f_{m-j}(x)` for `j < m <= n`
/// whenever the right side is below its cap.
pub fn run_closure_experiments(
    spec: &RealSpec,
    base: u32,
    shift: usize,
    n: usize,
    seed: u64,
) -> Result<ExperimentResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    search::check_budget(base, n, search::DEFAULT_BUDGET)?;
    let f = RepSystem::identity(base)?;
    let g = RepSystem::complement(f.clone());
    let one_minus = numstream::complement(spec)?;
    let mut res = ExperimentResult::new(
        "closure",
        vec![
            ("spec", spec.to_string()),
            ("base", base.to_string()),
            ("shift", shift.to_string()),
            ("n", n.to_string()),
            ("seed", seed.to_string()),
        ],
    );

    let x = representative(spec, base, n + 16)?;
    let y = BigRational::one() - &x;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    let samples = 256;
    for _ in 0..samples {
        let len = rng.gen_range(0..=n + 4);
        let sigma: Vec<u8> = (0..len).map(|_| rng.gen_range(0..base) as u8).collect();
        let lhs = (f.eval(&sigma)? - &x).abs();
        let rhs = (g.eval(&sigma)? - &y).abs();
        mismatches += (lhs != rhs) as usize;
    }
    res.check(
        format!("|f(σ)-x| = |g(σ)-(1-x)| on {samples} sampled σ"),
        "0 mismatches",
        format!("{mismatches} mismatches"),
        mismatches == 0,
    );

    let exhaustive = repsys::SearchOptions {
        prune_identity: false,
        ..repsys::SearchOptions::default()
    };
    for m in 1..=n {
        let a = repsys::c_f_n_with(spec, &f, m, &exhaustive)?;
        let b = repsys::c_f_n_with(&one_minus, &g, m, &exhaustive)?;
        res.check(
            format!("C^f_{m}(x) = C^(1-f)_{m}(1-x)"),
            show(&a),
            show(&b),
            a == b,
        );
    }

    if shift > 0 {
        let q = ratio::ulp(base, shift);
        let scaled = numstream::scale(&q, spec)?;
        let qf = RepSystem::affine(q.clone(), BigRational::from_integer(0.into()), f.clone());
        let scaled_digits = numstream::digits(&scaled, base, n + shift)?;
        let plain = numstream::digits(spec, base, n)?;
        let shifted_ok = scaled_digits.digits()[..shift].iter().all(|&d| d == 0)
            && scaled_digits.digits()[shift..] == *plain.digits();
        res.check(
            format!("digits of b^-{shift}·x are x shifted by {shift}"),
            "equal",
            if shifted_ok { "equal" } else { "different" },
            shifted_ok,
        );
        for m in shift + 1..=n {
            let rhs = repsys::c_f_n(spec, &f, m - shift)?;
            if rhs.cap_hit {
                continue;
            }
            let lhs = repsys::c_f_n_with(&scaled, &qf, m, &exhaustive)?;
            res.check(
                format!("C^(qf)_{m}(qx) = C^f_{}(x)", m - shift),
                show(&rhs),
                show(&lhs),
                lhs.value == rhs.value,
            );
        }
    }
    Ok(res)
}

/// Real numbers the compose suite draws from.
fn random_spec<R: Rng>(rng: &mut R, base: u32) -> Result<RealSpec> {
    Ok(match rng.gen_range(0..4) {
        0 => RealSpec::champernowne(base)?,
        1 => RealSpec::square_root(rng.gen_range(2..=3))?,
        _ => {
            let den = rng.gen_range(1..=30i64);
            RealSpec::rational(rng.gen_range(0..den), den)?
        }
    })
}

fn random_system<R: Rng>(rng: &mut R, base: u32) -> Result<RepSystem> {
    let id = RepSystem::identity(base)?;
    Ok(if rng.gen_bool(0.5) {
        id
    } else {
        let q = BigRational::new(rng.gen_range(1..=4).into(), rng.gen_range(1..=4).into());
        let sign = if rng.gen_bool(0.25) { -1 } else { 1 };
        let r = BigRational::new(rng.gen_range(-2..=2).into(), rng.gen_range(1..=4).into());
        RepSystem::affine(q * BigRational::from_integer(sign.into()), r, id)
    })
}

/// Random `(f, D, x, n)` instances: the complexity of `x` under `f∘D` must
/// equal `C^f_{n,D}(x)` computed by input enumeration and by its definition
/// over outputs, and `D = I` must collapse to `C^f_n(x)`.
pub fn run_compose_identity_suite(trials: usize, seed: u64) -> Result<ExperimentResult> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut res = ExperimentResult::new(
        "compose",
        vec![("trials", trials.to_string()), ("seed", seed.to_string())],
    );
    for t in 0..trials {
        let base = rng.gen_range(2..=3);
        let d = match t % 10 {
            0 => Transducer::doubling(base, rng.gen_range(0..base) as u8)?,
            1 => Transducer::identity(base)?,
            _ => {
                let states = rng.gen_range(1..=4);
                Transducer::random(&mut rng, base, states, 2)?
            }
        };
        let f = random_system(&mut rng, base)?;
        let x = random_spec(&mut rng, base)?;
        let n = rng.gen_range(1..=8);
        let g = RepSystem::compose(f.clone(), d.clone(), "D")?;
        let via_compose = repsys::c_f_n(&x, &g, n)?;
        let via_inputs = repsys::c_f_nd(&x, &f, &d, n)?;
        let via_outputs = repsys::c_f_nd_by_outputs(&x, &f, &d, n, search::DEFAULT_BUDGET)?;
        let label = format!("trial {t}: b={base} n={n} x={x} f={f}");
        res.check(
            format!("{label} compose"),
            format!("{} = {}", show(&via_inputs), show(&via_outputs)),
            show(&via_compose),
            via_compose == via_inputs && via_inputs == via_outputs,
        );
        let copy = Transducer::identity(base)?;
        let collapsed = repsys::c_f_nd(&x, &f, &copy, n)?;
        let plain = repsys::c_f_n(&x, &f, n)?;
        res.check(
            format!("{label} identity collapse"),
            show(&plain),
            show(&collapsed),
            collapsed == plain,
        );
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separation_passes() {
        let r = run_separation_example(3, 10).unwrap();
        assert!(r.passed(), "{}", r.to_text());
        assert_eq!(r.checks.len(), 14);
        let r = run_separation_example(4, 8).unwrap();
        assert!(r.passed(), "{}", r.to_text());
        assert!(run_separation_example(2, 10).is_err());
    }

    #[test]
    fn interleave_small() {
        let r = run_interleave_experiment(10_000).unwrap();
        assert!(r.passed(), "{}", r.to_text());
        assert!(run_interleave_experiment(100).is_err());
    }

    #[test]
    fn closure_on_a_third() {
        let x = RealSpec::rational(1, 3).unwrap();
        let r = run_closure_experiments(&x, 10, 1, 4, 1).unwrap();
        assert!(r.passed(), "{}", r.to_text());
    }

    #[test]
    fn compose_suite_small() {
        let r = run_compose_identity_suite(30, 7).unwrap();
        assert!(r.passed(), "{}", r.to_text());
        assert_eq!(r.checks.len(), 60);
        assert_eq!(r, run_compose_identity_suite(30, 7).unwrap());
    }

    #[test]
    fn reports() {
        let mut r = ExperimentResult::new("demo", vec![("k", "1".into())]);
        r.check("a, b", "1", "1", true);
        r.check("c", "2", "3", false);
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 1);
        assert!(r.to_text().contains("[FAIL] c: expected 2, observed 3"));
        assert_eq!(
            r.to_csv(),
            "experiment,check,expected,observed,pass\ndemo,\"a, b\",1,1,1\ndemo,c,2,3,0\n"
        );
    }
}
