//! Overlapping block counts and their exact discrepancy from the uniform
//! frequency `b^-k`.

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numstream::{self, DigitPrefix, RealSpec};
use crate::ratio;

/// Largest block table `normality_profile` will allocate.
pub const MAX_TABLE: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockCounts {
    base: u32,
    k: usize,
    n: usize,
    /// Indexed by the block read as a big-endian base-`b` numeral.
    counts: Vec<u64>,
}

impl BlockCounts {
    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn block_len(&self) -> usize {
        self.k
    }

    pub fn prefix_len(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of windows, `n - k + 1`.
    pub fn windows(&self) -> u64 {
        (self.n - self.k + 1) as u64
    }

    pub fn count(&self, block: &[u8]) -> u64 {
        assert_eq!(block.len(), self.k);
        let idx = block
            .iter()
            .fold(0usize, |acc, &d| acc * self.base as usize + d as usize);
        self.counts[idx]
    }
}

fn table_size(base: u32, k: usize) -> Option<u64> {
    (base as u64).checked_pow(k as u32)
}

/// Counts every length-`k` window of `prefix` in one pass with a rolling index.
pub fn count_blocks(prefix: &DigitPrefix, k: usize) -> Result<BlockCounts> {
    let n = prefix.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "block length {k} must lie in 1..={n}"
        )));
    }
    let base = prefix.base();
    let size = table_size(base, k)
        .filter(|&s| s <= MAX_TABLE)
        .ok_or_else(|| {
            Error::InvalidArgument(format!("{base}^{k} blocks exceed the table limit"))
        })?;
    let mut counts = vec![0u64; size as usize];
    let b = base as u64;
    let mut idx = 0u64;
    for (i, &d) in prefix.digits().iter().enumerate() {
        idx = (idx * b + d as u64) % size;
        if i + 1 >= k {
            counts[idx as usize] += 1;
        }
    }
    Ok(BlockCounts { base, k, n, counts })
}

/// `max_w |count(w)/(n-k+1) - b^-k|`, exactly.
pub fn discrepancy(counts: &BlockCounts) -> BigRational {
    // |c·b^k - m| / (m·b^k) with m windows.
    let m = counts.windows() as u128;
    let bk = counts.counts.len() as u128;
    let worst = counts
        .counts
        .iter()
        .map(|&c| (c as u128 * bk).abs_diff(m))
        .max()
        .unwrap_or(0);
    BigRational::new(BigInt::from(worst), BigInt::from(m * bk))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridPoint {
    pub k: usize,
    pub n: usize,
    pub discrepancy: BigRational,
}

#[derive(Clone, Debug)]
pub struct NormalityReport {
    pub spec: String,
    pub base: u32,
    pub points: Vec<GridPoint>,
}

impl NormalityReport {
    pub fn series(&self, k: usize) -> Vec<&GridPoint> {
        self.points.iter().filter(|p| p.k == k).collect()
    }

    pub fn at(&self, k: usize, n: usize) -> Option<&BigRational> {
        self.points
            .iter()
            .find(|p| p.k == k && p.n == n)
            .map(|p| &p.discrepancy)
    }

    /// Whether the discrepancy for block length `k` strictly decreases along
    /// the grid.
    pub fn strictly_decreasing(&self, k: usize) -> bool {
        self.series(k)
            .windows(2)
            .all(|w| w[1].discrepancy < w[0].discrepancy)
    }

    pub fn nonincreasing(&self, k: usize) -> bool {
        self.series(k)
            .windows(2)
            .all(|w| w[1].discrepancy <= w[0].discrepancy)
    }

    /// Columns `spec,base,k,n,discrepancy_num,discrepancy_den`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("spec,base,k,n,discrepancy_num,discrepancy_den\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.spec,
                self.base,
                p.k,
                p.n,
                p.discrepancy.numer(),
                p.discrepancy.denom()
            ));
        }
        out
    }
}

/// Discrepancy for every `k <= k_max` at every grid length. Points are
/// ordered by `k`, then by grid position.
pub fn normality_profile(
    spec: &RealSpec,
    base: u32,
    k_max: usize,
    n_grid: &[usize],
) -> Result<NormalityReport> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be positive".into()));
    }
    if table_size(base, k_max).is_none_or(|s| s > MAX_TABLE) {
        return Err(Error::InvalidArgument(format!(
            "{base}^{k_max} blocks exceed the table limit {MAX_TABLE}"
        )));
    }
    let n_max = n_grid.iter().copied().max().unwrap_or(0);
    let all = numstream::digits(spec, base, n_max)?;
    let jobs: Vec<(usize, usize)> = (1..=k_max)
        .flat_map(|k| n_grid.iter().map(move |&n| (k, n)))
        .collect();
    let points = jobs
        .par_iter()
        .map(|&(k, n)| {
            let prefix = DigitPrefix::new(base, all.digits()[..n].to_vec())?;
            Ok(GridPoint {
                k,
                n,
                discrepancy: discrepancy(&count_blocks(&prefix, k)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NormalityReport {
        spec: spec.to_string(),
        base,
        points,
    })
}

/// Reporting helper: discrepancy as `f64`.
pub fn approx(d: &BigRational) -> f64 {
    ratio::to_f64(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prefix(base: u32, digits: &[u8]) -> DigitPrefix {
        DigitPrefix::new(base, digits.to_vec()).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn simple_counts() {
        let c = count_blocks(&prefix(10, &[3, 3, 3, 3]), 1).unwrap();
        assert_eq!(c.count(&[3]), 4);
        assert_eq!(c.counts().iter().sum::<u64>(), 4);
        assert_eq!(discrepancy(&c), q(9, 10));

        let c = count_blocks(&prefix(2, &[1, 0, 1, 0]), 2).unwrap();
        assert_eq!(c.count(&[1, 0]), 2);
        assert_eq!(c.count(&[0, 1]), 1);
        assert_eq!(c.count(&[0, 0]), 0);
        assert_eq!(c.count(&[1, 1]), 0);
    }

    #[test]
    fn uniform_counts_have_zero_discrepancy() {
        let c = count_blocks(&prefix(2, &[0, 1, 1, 0, 0, 1]), 1).unwrap();
        assert_eq!(discrepancy(&c), q(0, 1));
    }

    #[test]
    fn bad_block_lengths() {
        assert!(count_blocks(&prefix(2, &[0, 1]), 3).is_err());
        assert!(count_blocks(&prefix(2, &[0, 1]), 0).is_err());
        let spec: RealSpec = "rat:1/3".parse().unwrap();
        assert!(normality_profile(&spec, 10, 8, &[100]).is_err());
    }

    #[test]
    fn rational_profile_is_pinned() {
        let spec: RealSpec = "rat:1/3".parse().unwrap();
        let r = normality_profile(&spec, 10, 1, &[10, 100, 1000]).unwrap();
        assert!(r.points.iter().all(|p| p.discrepancy == q(9, 10)));
        assert!(r
            .to_csv()
            .starts_with("spec,base,k,n,discrepancy_num,discrepancy_den\nrat:1/3,10,1,10,9,10\n"));
    }

    #[test]
    fn pseudorandom_binary_blocks_are_balanced() {
        let spec = RealSpec::pseudorandom(2024, 2).unwrap();
        let r = normality_profile(&spec, 2, 3, &[100_000]).unwrap();
        for p in &r.points {
            assert!(
                approx(&p.discrepancy) < 0.01,
                "k={} {}",
                p.k,
                approx(&p.discrepancy)
            );
        }
    }

    #[test]
    fn eventually_periodic_streams_stay_discrepant() {
        // 0.12(345) in base 10: some block length up to the period stays
        // bounded away from uniform.
        let spec = RealSpec::rational(12_333, 99_900).unwrap();
        let r = normality_profile(&spec, 10, 3, &[1000, 10_000]).unwrap();
        for n in [1000, 10_000] {
            let worst = r
                .points
                .iter()
                .filter(|p| p.n == n)
                .map(|p| approx(&p.discrepancy))
                .fold(0.0, f64::max);
            assert!(worst > 0.2, "n={n}: {worst}");
        }
    }

    fn naive_counts(digits: &[u8], base: u32, k: usize) -> Vec<u64> {
        let mut counts = vec![0u64; (base as usize).pow(k as u32)];
        for w in digits.windows(k) {
            let idx = w
                .iter()
                .fold(0usize, |a, &d| a * base as usize + d as usize);
            counts[idx] += 1;
        }
        counts
    }

    proptest! {
        #[test]
        fn rolling_index_matches_naive_windows(
            base in 2u32..5,
            raw in prop::collection::vec(any::<u8>(), 1..200),
            k in 1usize..5,
        ) {
            let digits: Vec<u8> = raw.iter().map(|d| d % base as u8).collect();
            prop_assume!(k <= digits.len());
            let c = count_blocks(&prefix(base, &digits), k).unwrap();
            prop_assert_eq!(c.counts(), &naive_counts(&digits, base, k)[..]);
            prop_assert_eq!(c.counts().iter().sum::<u64>(), c.windows());
            let d = discrepancy(&c);
            prop_assert!(d >= q(0, 1) && d <= q(1, 1));
        }

        #[test]
        fn dropping_last_digit_marginalizes(
            base in 2u32..4,
            raw in prop::collection::vec(any::<u8>(), 3..150),
            k in 1usize..4,
        ) {
            let digits: Vec<u8> = raw.iter().map(|d| d % base as u8).collect();
            prop_assume!(k < digits.len());
            let longer = count_blocks(&prefix(base, &digits), k + 1).unwrap();
            let shorter = count_blocks(&prefix(base, &digits), k).unwrap();
            let b = base as usize;
            let last = &digits[digits.len() - k..];
            let last_idx = last.iter().fold(0usize, |a, &d| a * b + d as usize);
            for (idx, &c) in shorter.counts().iter().enumerate() {
                let marginal: u64 = (0..b).map(|a| longer.counts()[idx * b + a]).sum();
                // The final k-window has no successor.
                prop_assert_eq!(marginal + (idx == last_idx) as u64, c);
            }
        }
    }
}
