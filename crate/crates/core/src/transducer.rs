//! Finite-state `Σ_b`-transducers `D = (Q, q0, δ, out)`.
//!
//! A run starts in `q0`; on each input digit `a` in state `q` the machine
//! emits `out(q, a)` and moves to `δ(q, a)`.
//!
//! Text format:
//!
//! ```text
//! base=3 states=1 start=q0
//! q0 0 -> q0 / 0
//! q0 1 -> q0 / 11
//! q0 2 -> q0 / 2
//! ```
//!
//! Outputs use `-` for the empty string and comma-separated digits above
//! base 10.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numstream::{check_base, Nearness, RealSpec};
use crate::ratio;
use crate::search::{self, ComplexityEntry};
use crate::textfmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Transducer {
    base: u32,
    states: Vec<String>,
    start: usize,
    /// Row-major `state * base + digit`.
    next: Vec<usize>,
    out: Vec<Vec<u8>>,
}

/// `C_D(σ)`: a finite input length, or `NotAnOutput` when no input produces σ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InputCost {
    Finite(usize),
    NotAnOutput,
}

impl InputCost {
    pub fn finite(self) -> Option<usize> {
        match self {
            InputCost::Finite(n) => Some(n),
            InputCost::NotAnOutput => None,
        }
    }
}

impl Transducer {
    /// Builds a machine from a full table: `table[q * base + a] = (δ(q,a), out(q,a))`.
    pub fn new(
        base: u32,
        states: Vec<String>,
        start: usize,
        table: Vec<(usize, Vec<u8>)>,
    ) -> Result<Self> {
        check_base(base)?;
        let m = states.len();
        if m == 0 || start >= m {
            return Err(Error::InvalidArgument("start state out of range".into()));
        }
        if table.len() != m * base as usize {
            return Err(Error::InvalidArgument(format!(
                "table has {} entries, expected {}",
                table.len(),
                m * base as usize
            )));
        }
        let (next, out): (Vec<_>, Vec<_>) = table.into_iter().unzip();
        if next.iter().any(|&q| q >= m) {
            return Err(Error::InvalidArgument(
                "transition target out of range".into(),
            ));
        }
        if out.iter().flatten().any(|&d| d as u32 >= base) {
            return Err(Error::InvalidArgument("output digit not below base".into()));
        }
        Ok(Transducer {
            base,
            states,
            start,
            next,
            out,
        })
    }

    /// One state copying its input.
    pub fn identity(base: u32) -> Result<Self> {
        let table = (0..base).map(|a| (0, vec![a as u8])).collect();
        Self::new(base, vec!["q0".into()], 0, table)
    }

    /// One state that emits `digit digit` on `digit` and copies everything else.
    pub fn doubling(base: u32, digit: u8) -> Result<Self> {
        let table = (0..base as u8)
            .map(|a| (0, if a == digit { vec![a, a] } else { vec![a] }))
            .collect();
        Self::new(base, vec!["q0".into()], 0, table)
    }

    /// One state that never emits anything.
    pub fn silent(base: u32) -> Result<Self> {
        let table = (0..base).map(|_| (0, Vec::new())).collect();
        Self::new(base, vec!["q0".into()], 0, table)
    }

    /// Uniformly random machine with `states` states and outputs of length
    /// `0..=max_out`.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        base: u32,
        states: usize,
        max_out: usize,
    ) -> Result<Self> {
        let names = (0..states).map(|i| format!("q{i}")).collect();
        let table = (0..states * base as usize)
            .map(|_| {
                let len = rng.gen_range(0..=max_out);
                let out = (0..len).map(|_| rng.gen_range(0..base) as u8).collect();
                (rng.gen_range(0..states), out)
            })
            .collect();
        Self::new(base, names, 0, table)
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn step(&self, state: usize, digit: u8) -> (usize, &[u8]) {
        let i = state * self.base as usize + digit as usize;
        (self.next[i], &self.out[i])
    }

    pub fn run(&self, input: &[u8]) -> Vec<u8> {
        let mut q = self.start;
        let mut out = Vec::new();
        for &a in input {
            let (next, emitted) = self.step(q, a);
            out.extend_from_slice(emitted);
            q = next;
        }
        out
    }

    /// `C_D(σ)` by breadth-first search over `(state, matched prefix of σ)`.
    ///
    /// An edge consumes one input digit and is admissible only when its
    /// output continues the match without mismatch or overshoot.
    pub fn c_d(&self, sigma: &[u8]) -> InputCost {
        let width = sigma.len() + 1;
        let node = |q: usize, m: usize| q * width + m;
        let mut dist = vec![usize::MAX; self.states.len() * width];
        let mut queue = VecDeque::new();
        dist[node(self.start, 0)] = 0;
        queue.push_back((self.start, 0usize));
        while let Some((q, m)) = queue.pop_front() {
            let d = dist[node(q, m)];
            if m == sigma.len() {
                return InputCost::Finite(d);
            }
            for a in 0..self.base as u8 {
                let (next, emitted) = self.step(q, a);
                let end = m + emitted.len();
                if end > sigma.len() || sigma[m..end] != *emitted {
                    continue;
                }
                let slot = &mut dist[node(next, end)];
                if *slot == usize::MAX {
                    *slot = d + 1;
                    queue.push_back((next, end));
                }
            }
        }
        InputCost::NotAnOutput
    }

    /// `C_{n,D}(x)`: the least `|p|` with `|0.D(p) - x| < b^-n`, capped at `n + 1`.
    pub fn c_nd(&self, spec: &RealSpec, n: usize) -> Result<ComplexityEntry> {
        self.c_nd_with_budget(spec, n, search::DEFAULT_BUDGET)
    }

    pub fn c_nd_with_budget(
        &self,
        spec: &RealSpec,
        n: usize,
        budget: u128,
    ) -> Result<ComplexityEntry> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "precision n must be at least 1".into(),
            ));
        }
        search::check_budget(self.base, n, budget)?;
        let near = Nearness::with_precision(spec, self.base, n)?;
        let found = search::shortest(self.base, n, |p| {
            near.test(&ratio::fraction_value(&self.run(p), self.base))
        })?;
        Ok(ComplexityEntry::from_search(n, found))
    }

    /// `c_nd` at each precision in `ns`.
    pub fn c_nd_profile(&self, spec: &RealSpec, ns: &[usize]) -> Result<Vec<ComplexityEntry>> {
        ns.iter().map(|&n| self.c_nd(spec, n)).collect()
    }
}

impl fmt::Display for Transducer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "base={} states={} start={}",
            self.base,
            self.states.len(),
            self.states[self.start]
        )?;
        for (q, name) in self.states.iter().enumerate() {
            for a in 0..self.base as u8 {
                let (next, out) = self.step(q, a);
                writeln!(
                    f,
                    "{name} {a} -> {} / {}",
                    self.states[next],
                    textfmt::format_digit_string(out, self.base)
                )?;
            }
        }
        Ok(())
    }
}

/// State table shared by the transducer and martingale formats: header
/// fields, state names in order of first appearance as a source, and for
/// each `(state, digit)` the target name plus the text after the target.
pub(crate) struct RawTable<'a> {
    pub header_line: usize,
    pub fields: HashMap<&'a str, &'a str>,
    pub base: u32,
    pub states: Vec<String>,
    pub start: usize,
    /// `(line, target, rest)` by `state * base + digit`.
    pub cells: Vec<Option<(usize, usize, Option<&'a str>)>>,
    /// Lines that were not transitions, handed back to the caller.
    pub other: Vec<(usize, &'a str)>,
}

pub(crate) fn parse_table(text: &str) -> Result<RawTable<'_>> {
    let mut lines = textfmt::content_lines(text);
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty machine description"))?;
    let fields = textfmt::header_fields(header_line, header)?;
    let base = textfmt::parse_base(
        textfmt::required(&fields, "base", header_line)?,
        header_line,
    )?;
    let declared: usize = textfmt::required(&fields, "states", header_line)?
        .parse()
        .map_err(|_| Error::parse(header_line, "bad state count"))?;
    let start_name = textfmt::required(&fields, "start", header_line)?;

    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut states: Vec<String> = Vec::new();
    let mut first_line: Vec<usize> = Vec::new();
    let mut raw: Vec<(usize, usize, u8, &str, Option<&str>)> = Vec::new();
    let mut other = Vec::new();
    for (line, body) in lines {
        let Some((lhs, rhs)) = body.split_once("->") else {
            other.push((line, body));
            continue;
        };
        let mut lhs_toks = lhs.split_whitespace();
        let (Some(src), Some(digit), None) = (lhs_toks.next(), lhs_toks.next(), lhs_toks.next())
        else {
            return Err(Error::parse(line, "expected `<state> <digit> -> <state>`"));
        };
        let digit = textfmt::parse_digit(digit, base, line)?;
        let (target, rest) = match rhs.split_once('/') {
            Some((t, r)) => (t.trim(), Some(r.trim())),
            None => (rhs.trim(), None),
        };
        if target.is_empty() || target.contains(char::is_whitespace) {
            return Err(Error::parse(line, "bad target state"));
        }
        let src_idx = *index.entry(src).or_insert_with(|| {
            states.push(src.to_string());
            first_line.push(line);
            states.len() - 1
        });
        raw.push((line, src_idx, digit, target, rest));
    }
    if states.len() != declared {
        return Err(Error::parse(
            header_line,
            format!("declared {declared} states, found {}", states.len()),
        ));
    }
    let start = *index
        .get(start_name)
        .ok_or_else(|| Error::parse(header_line, format!("unknown start state `{start_name}`")))?;
    let b = base as usize;
    let mut cells = vec![None; states.len() * b];
    for (line, src, digit, target, rest) in raw {
        let tgt = *index
            .get(target)
            .ok_or_else(|| Error::parse(line, format!("state `{target}` has no transitions")))?;
        let cell = &mut cells[src * b + digit as usize];
        if cell.is_some() {
            return Err(Error::parse(line, "duplicate transition"));
        }
        *cell = Some((line, tgt, rest));
    }
    for (i, cell) in cells.iter().enumerate() {
        if cell.is_none() {
            let q = i / b;
            return Err(Error::parse(
                first_line[q],
                format!("state `{}` has no transition on digit {}", states[q], i % b),
            ));
        }
    }
    Ok(RawTable {
        header_line,
        fields,
        base,
        states,
        start,
        cells,
        other,
    })
}

pub fn parse_transducer(text: &str) -> Result<Transducer> {
    let raw = parse_table(text)?;
    if let Some(&(line, _)) = raw.other.first() {
        return Err(Error::parse(line, "expected a transition line"));
    }
    if let Some(key) = raw
        .fields
        .keys()
        .find(|k| !["base", "states", "start"].contains(k))
    {
        return Err(Error::parse(
            raw.header_line,
            format!("unknown header field `{key}`"),
        ));
    }
    let table = raw
        .cells
        .iter()
        .map(|cell| {
            let (line, target, rest) = cell.expect("checked complete");
            let rest = rest.ok_or_else(|| Error::parse(line, "missing `/ <output>`"))?;
            Ok((target, textfmt::parse_digit_string(rest, raw.base, line)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Transducer::new(raw.base, raw.states, raw.start, table)
}

pub fn serialize_transducer(d: &Transducer) -> String {
    d.to_string()
}

impl FromStr for Transducer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_transducer(s)
    }
}
