//! Frequency distribution of the Spearman distance under the uniform model.
//!
//! `N_d` is the number of permutations of `n` items at distance `d` from the
//! identity. Only even distances occur, so a table for `n` has
//! `C(n+1, 3) + 1` entries covering `d = 0, 2, ..., d_max`.

mod rate;
mod ryser;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::cache::CountsCache;
use crate::ranking::d_max;

pub use rate::{
    approx_counts, fit_rate_coefficients, rate_function, rate_rmse, Normalization, RateCoefficients, RateModel,
    RateSplit,
};
pub use ryser::MAX_RYSER_N;

/// Default crossover: exact tables up to this `n`, the rate-function
/// approximation above it.
pub const DEFAULT_EXACT_MAX: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    #[serde(rename = "approx")]
    Approximate,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::Approximate => "approx",
        }
    }
}

/// Per-`n` table of `log N_d` for `d = 0, 2, ..., d_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceDistribution {
    n: usize,
    log_counts: Vec<f64>,
    exact: Option<Vec<u128>>,
    provenance: Provenance,
}

/// Number of even distances for `n` items, `C(n+1, 3) + 1`.
pub fn table_len(n: usize) -> usize {
    d_max(n) as usize / 2 + 1
}

impl DistanceDistribution {
    pub fn from_exact(n: usize, counts: Vec<u128>) -> Result<Self> {
        if counts.len() != table_len(n) {
            return Err(Error::DimensionMismatch { expected: table_len(n), found: counts.len() });
        }
        let log_counts = counts.iter().map(|&c| if c == 0 { f64::NEG_INFINITY } else { (c as f64).ln() }).collect();
        Ok(DistanceDistribution { n, log_counts, exact: Some(counts), provenance: Provenance::Exact })
    }

    pub fn from_log_counts(n: usize, log_counts: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if log_counts.len() != table_len(n) {
            return Err(Error::DimensionMismatch { expected: table_len(n), found: log_counts.len() });
        }
        if let Some(i) = log_counts.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::NonFinite(i));
        }
        Ok(DistanceDistribution { n, log_counts, exact: None, provenance })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.log_counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_counts.is_empty()
    }

    pub fn d_max(&self) -> u64 {
        d_max(self.n)
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Distance of entry `h`, i.e. `2h`.
    pub fn distance(&self, h: usize) -> u64 {
        2 * h as u64
    }

    pub fn distances(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len()).map(|h| 2 * h as u64)
    }

    /// Natural log of `N_d`, `-inf` where the count is zero.
    pub fn log_counts(&self) -> &[f64] {
        &self.log_counts
    }

    /// Integer counts, present for exact tables.
    pub fn exact_counts(&self) -> Option<&[u128]> {
        self.exact.as_deref()
    }

    pub fn log_count_at(&self, d: u64) -> Option<f64> {
        if d % 2 == 1 {
            return Some(f64::NEG_INFINITY);
        }
        self.log_counts.get((d / 2) as usize).copied()
    }
}

/// Exact counts for `2 <= n <= DEFAULT_EXACT_MAX`.
pub fn exact_counts(n: usize) -> Result<DistanceDistribution> {
    exact_counts_up_to(n, DEFAULT_EXACT_MAX)
}

/// Exact counts with a caller-chosen ceiling (at most [`MAX_RYSER_N`]).
/// Runtime grows like `2^n · n^5`; `n = 14` takes seconds, `n = 18` hours.
pub fn exact_counts_up_to(n: usize, ceiling: usize) -> Result<DistanceDistribution> {
    let max = ceiling.min(MAX_RYSER_N);
    if !(2..=max).contains(&n) {
        return Err(Error::ExactRangeExceeded { n, max });
    }
    let poly = ryser::distance_polynomial(n);
    let mut counts = Vec::with_capacity(table_len(n));
    for (d, &c) in poly.iter().enumerate() {
        if d % 2 == 1 {
            if c != 0 {
                return Err(Error::InvalidArgument(format!("internal: odd distance {d} has count {c}")));
            }
        } else {
            counts.push(c as u128);
        }
    }
    let total: u128 = counts.iter().sum();
    let fact: u128 = (1..=n as u128).product();
    if total != fact {
        return Err(Error::InvalidArgument(format!("internal: counts for n = {n} sum to {total}, expected {fact}")));
    }
    DistanceDistribution::from_exact(n, counts)
}

/// Closed-form `(N_0, N_2, N_4, N_6)`:
/// `1, n-1, C(n-2, 2)` and `(m³ - 6m² + 23m - 6)/6` with `m = n - 2`,
/// clamped at zero where the polynomials go negative for tiny `n`.
pub fn boundary_counts(n: usize) -> [u128; 4] {
    let n = n as i128;
    let m = n - 2;
    let n2 = (n - 1).max(0);
    let n4 = if m >= 2 { m * (m - 1) / 2 } else { 0 };
    let n6 = ((m * m * m - 6 * m * m + 23 * m - 6) / 6).max(0);
    [1, n2 as u128, n4 as u128, n6 as u128]
}

/// Chooses between exact and approximate tables and manages the disk cache.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CountsConfig {
    /// Largest `n` served by an exact table.
    pub exact_max: usize,
    pub rate: RateModel,
    pub normalization: Normalization,
    pub cache_dir: Option<PathBuf>,
}

impl Default for CountsConfig {
    fn default() -> Self {
        CountsConfig {
            exact_max: DEFAULT_EXACT_MAX,
            rate: RateModel::PUBLISHED,
            normalization: Normalization::Unit,
            cache_dir: None,
        }
    }
}

impl CountsConfig {
    pub fn with_cache(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    /// Table for `n`: exact up to `exact_max`, approximate above.
    pub fn build(&self, n: usize) -> Result<DistanceDistribution> {
        if n <= self.exact_max {
            self.exact(n)
        } else {
            self.approx(n)
        }
    }

    /// Exact table, read from or written to the cache when one is set.
    pub fn exact(&self, n: usize) -> Result<DistanceDistribution> {
        let ceiling = self.exact_max.max(DEFAULT_EXACT_MAX);
        match &self.cache_dir {
            Some(dir) => {
                let cache = CountsCache::new(dir);
                if let Some(dist) = cache.load(n, Provenance::Exact)? {
                    return Ok(dist);
                }
                let dist = exact_counts_up_to(n, ceiling)?;
                cache.store(&dist)?;
                Ok(dist)
            }
            None => exact_counts_up_to(n, ceiling),
        }
    }

    pub fn approx(&self, n: usize) -> Result<DistanceDistribution> {
        approx_counts(n, &self.rate.coefficients(n), self.normalization)
    }
}
