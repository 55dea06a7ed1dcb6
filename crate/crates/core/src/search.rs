//! Length-ordered exhaustive search over `Σ_b^{<ω}` with explicit budgets,
//! and the capped complexity records it produces.

use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Default ceiling on the number of candidate strings a search may visit.
pub const DEFAULT_BUDGET: u128 = 20_000_000;

/// One capped complexity value at precision `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ComplexityEntry {
    pub n: usize,
    pub value: usize,
    /// Set when no string of length `<= n` qualified and `value = n + 1`.
    pub cap_hit: bool,
}

impl ComplexityEntry {
    pub fn from_search(n: usize, found: Option<usize>) -> Self {
        match found {
            Some(len) if len <= n => ComplexityEntry {
                n,
                value: len,
                cap_hit: false,
            },
            _ => ComplexityEntry {
                n,
                value: n + 1,
                cap_hit: true,
            },
        }
    }

    pub fn ratio(&self) -> f64 {
        self.value as f64 / self.n as f64
    }
}

pub type ComplexityProfile = Vec<ComplexityEntry>;

/// `Σ_{L=0}^{max_len} b^L`, saturating.
pub fn candidate_count(base: u32, max_len: usize) -> u128 {
    let mut total = 0u128;
    let mut layer = 1u128;
    for _ in 0..=max_len {
        total = total.saturating_add(layer);
        layer = layer.saturating_mul(base as u128);
    }
    total
}

pub fn check_budget(base: u32, max_len: usize, budget: u128) -> Result<()> {
    let needed = candidate_count(base, max_len);
    if needed > budget {
        return Err(Error::BudgetExceeded {
            needed,
            limit: budget,
        });
    }
    Ok(())
}

/// Advances `s` to the next string of the same length in lexicographic order;
/// returns `false` after the last one.
pub fn increment(s: &mut [u8], base: u32) -> bool {
    for d in s.iter_mut().rev() {
        if (*d as u32) + 1 < base {
            *d += 1;
            return true;
        }
        *d = 0;
    }
    false
}

/// Calls `visit` on every string of length `len`, in lexicographic order,
/// until it returns `false`.
pub fn for_each_string(base: u32, len: usize, mut visit: impl FnMut(&[u8]) -> bool) {
    let mut s = vec![0u8; len];
    loop {
        if !visit(&s) {
            return;
        }
        if !increment(&mut s, base) {
            return;
        }
    }
}

/// Length of the shortest string (at most `max_len` long) satisfying `pred`.
///
/// Each length is searched in parallel, sharded by first digit; a hit in any
/// shard ends the length.
pub fn shortest<P>(base: u32, max_len: usize, pred: P) -> Result<Option<usize>>
where
    P: Fn(&[u8]) -> Result<bool> + Sync,
{
    if pred(&[])? {
        return Ok(Some(0));
    }
    for len in 1..=max_len {
        let stop = AtomicBool::new(false);
        let hit = (0..base as u8)
            .into_par_iter()
            .map(|first| -> Result<bool> {
                let mut s = vec![0u8; len];
                s[0] = first;
                loop {
                    if stop.load(Ordering::Relaxed) {
                        return Ok(false);
                    }
                    if pred(&s)? {
                        stop.store(true, Ordering::Relaxed);
                        return Ok(true);
                    }
                    if !increment(&mut s[1..], base) {
                        return Ok(false);
                    }
                }
            })
            .find_any(|r| !matches!(r, Ok(false)));
        match hit {
            Some(Ok(_)) => return Ok(Some(len)),
            Some(Err(e)) => return Err(e),
            None => {}
        }
    }
    Ok(None)
}
