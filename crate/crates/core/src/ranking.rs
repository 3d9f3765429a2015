//! Rankings, partial rankings, ranking datasets and the rank-vector
//! arithmetic the Spearman model is built on.
//!
//! A ranking of `n` items is stored as a rank vector: entry `i` holds the
//! rank (1 = most preferred) given to item `i`. Items are indexed from zero
//! in Rust slices; ranks are always 1-based.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Spearman distance between two rankings of `n` items,
/// `2 * C(n+1, 3)`, attained by a ranking and its reversal.
pub fn d_max(n: usize) -> u64 {
    let n = n as u64;
    (n + 1) * n * n.saturating_sub(1) / 3
}

/// `c_n = n(n+1)(2n+1)/6`, the squared norm of every rank vector.
pub fn c_n(n: usize) -> u64 {
    let n = n as u64;
    n * (n + 1) * (2 * n + 1) / 6
}

/// A full ranking: a permutation of `1..=n` with `n >= 2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Ranking(Vec<u32>);

impl Ranking {
    pub fn new(ranks: Vec<u32>) -> Result<Self> {
        let n = ranks.len();
        if n < 2 {
            return Err(Error::InvalidRanking(format!("a ranking needs at least 2 items, got {n}")));
        }
        let mut seen = vec![false; n];
        for (item, &r) in ranks.iter().enumerate() {
            if r == 0 || r as usize > n {
                return Err(Error::InvalidRanking(format!("rank {r} of item {} is outside 1..={n}", item + 1)));
            }
            if std::mem::replace(&mut seen[r as usize - 1], true) {
                return Err(Error::InvalidRanking(format!("duplicate rank {r}")));
            }
        }
        Ok(Ranking(ranks))
    }

    /// Caller guarantees `ranks` is a permutation of `1..=n`.
    pub(crate) fn from_vec_unchecked(ranks: Vec<u32>) -> Self {
        debug_assert!(Ranking::new(ranks.clone()).is_ok());
        Ranking(ranks)
    }

    /// The identity ranking `e = (1, 2, ..., n)`.
    pub fn identity(n: usize) -> Self {
        Ranking((1..=n as u32).collect())
    }

    /// The reversed identity `(n, n-1, ..., 1)`.
    pub fn reversed(n: usize) -> Self {
        Ranking((1..=n as u32).rev().collect())
    }

    /// Uniformly random permutation of `1..=n`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut ranks: Vec<u32> = (1..=n as u32).collect();
        ranks.shuffle(rng);
        Ranking(ranks)
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn ranks(&self) -> &[u32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    /// Item composition `(self ∘ σ)_i = self_{σ_i}`.
    pub fn compose(&self, sigma: &Ranking) -> Result<Ranking> {
        check_dims(self.n(), sigma.n())?;
        Ok(Ranking(sigma.0.iter().map(|&s| self.0[s as usize - 1]).collect()))
    }

    /// Rank reversal `n + 1 - r_i`.
    pub fn reverse_ranks(&self) -> Ranking {
        let m = self.n() as u32 + 1;
        Ranking(self.0.iter().map(|&r| m - r).collect())
    }

    /// Items ordered from most to least preferred (0-based item indices).
    pub fn ordering(&self) -> Vec<usize> {
        let mut order = vec![0usize; self.n()];
        for (item, &r) in self.0.iter().enumerate() {
            order[r as usize - 1] = item;
        }
        order
    }
}

impl TryFrom<Vec<u32>> for Ranking {
    type Error = Error;

    fn try_from(ranks: Vec<u32>) -> Result<Self> {
        Ranking::new(ranks)
    }
}

impl From<Ranking> for Vec<u32> {
    fn from(r: Ranking) -> Self {
        r.0
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Spearman distance `Σ (a_i - b_i)²`. Always even.
pub fn spearman_distance(a: &Ranking, b: &Ranking) -> Result<u64> {
    check_dims(a.n(), b.n())?;
    Ok(spearman_unchecked(a.ranks(), b.ranks()))
}

pub(crate) fn spearman_unchecked(a: &[u32], b: &[u32]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let diff = x as i64 - y as i64;
            (diff * diff) as u64
        })
        .sum()
}

/// Scalar product `aᵀb` of two rankings. For full rankings
/// `d(a, b) = 2 (c_n - aᵀb)`.
pub fn scalar_product(a: &Ranking, b: &Ranking) -> Result<u64> {
    check_dims(a.n(), b.n())?;
    Ok(dot_unchecked(a.ranks(), b.ranks()))
}

pub(crate) fn dot_unchecked(a: &[u32], b: &[u32]) -> u64 {
    a.iter().zip(b).map(|(&x, &y)| x as u64 * y as u64).sum()
}

/// A rank vector in which some items may be unranked.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Option<u32>>", into = "Vec<Option<u32>>")]
pub struct PartialRanking(Vec<Option<u32>>);

impl PartialRanking {
    pub fn new(ranks: Vec<Option<u32>>) -> Result<Self> {
        let n = ranks.len();
        if n < 2 {
            return Err(Error::InvalidRanking(format!("a ranking needs at least 2 items, got {n}")));
        }
        let mut seen = vec![false; n];
        let mut ranked = 0;
        for (item, r) in ranks.iter().enumerate() {
            let Some(r) = *r else { continue };
            if r == 0 || r as usize > n {
                return Err(Error::InvalidRanking(format!("rank {r} of item {} is outside 1..={n}", item + 1)));
            }
            if std::mem::replace(&mut seen[r as usize - 1], true) {
                return Err(Error::InvalidRanking(format!("duplicate rank {r}")));
            }
            ranked += 1;
        }
        if ranked == 0 {
            return Err(Error::InvalidRanking("no item is ranked".into()));
        }
        Ok(PartialRanking(ranks))
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn ranks(&self) -> &[Option<u32>] {
        &self.0
    }

    /// 0-based indices of the ranked items.
    pub fn ranked_items(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.0[i].is_some()).collect()
    }

    /// 0-based indices of the unranked items.
    pub fn unranked_items(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.0[i].is_none()).collect()
    }

    pub fn num_ranked(&self) -> usize {
        self.0.iter().filter(|r| r.is_some()).count()
    }

    pub fn is_full(&self) -> bool {
        self.0.iter().all(Option::is_some)
    }

    /// Ranks in `1..=n` not used by any ranked item, ascending.
    pub fn missing_ranks(&self) -> Vec<u32> {
        let mut used = vec![false; self.n()];
        for r in self.0.iter().flatten() {
            used[*r as usize - 1] = true;
        }
        (1..=self.n() as u32).filter(|&r| !used[r as usize - 1]).collect()
    }

    /// Number of full rankings compatible with this one, `(n - n_l)!`.
    pub fn completion_count(&self) -> u128 {
        let missing = (self.n() - self.num_ranked()) as u128;
        (1..=missing).product()
    }

    pub fn to_full(&self) -> Option<Ranking> {
        self.0.iter().copied().collect::<Option<Vec<u32>>>().map(Ranking::from_vec_unchecked)
    }
}

impl From<Ranking> for PartialRanking {
    fn from(r: Ranking) -> Self {
        PartialRanking(r.0.into_iter().map(Some).collect())
    }
}

impl TryFrom<Vec<Option<u32>>> for PartialRanking {
    type Error = Error;

    fn try_from(ranks: Vec<Option<u32>>) -> Result<Self> {
        PartialRanking::new(ranks)
    }
}

impl From<PartialRanking> for Vec<Option<u32>> {
    fn from(r: PartialRanking) -> Self {
        r.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub ranking: PartialRanking,
    pub count: u64,
}

/// Distinct (partial) rankings with their multiplicities.
///
/// Duplicate rank vectors are merged on construction, so the number of
/// distinct rows never exceeds the sample size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingDataset {
    items: Vec<String>,
    rows: Vec<DatasetRow>,
}

impl RankingDataset {
    pub fn new<I>(items: Vec<String>, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PartialRanking, u64)>,
    {
        let n = items.len();
        let mut index: HashMap<PartialRanking, usize> = HashMap::new();
        let mut out: Vec<DatasetRow> = Vec::new();
        for (ranking, count) in rows {
            check_dims(n, ranking.n())?;
            if count == 0 {
                continue;
            }
            match index.get(&ranking) {
                Some(&at) => out[at].count += count,
                None => {
                    index.insert(ranking.clone(), out.len());
                    out.push(DatasetRow { ranking, count });
                }
            }
        }
        if out.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(RankingDataset { items, rows: out })
    }

    /// Dataset of full rankings labelled `item1..itemN`.
    pub fn from_rankings<I>(rankings: I) -> Result<Self>
    where
        I: IntoIterator<Item = Ranking>,
    {
        let rankings: Vec<Ranking> = rankings.into_iter().collect();
        let n = rankings.first().ok_or(Error::EmptyDataset)?.n();
        RankingDataset::new(default_labels(n), rankings.into_iter().map(|r| (PartialRanking::from(r), 1)))
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn rows(&self) -> &[DatasetRow] {
        &self.rows
    }

    /// Total sample size `N = Σ N_l`.
    pub fn total(&self) -> u64 {
        self.rows.iter().map(|r| r.count).sum()
    }

    pub fn is_full(&self) -> bool {
        self.rows.iter().all(|r| r.ranking.is_full())
    }

    /// Full-ranking view with multiplicities as weights, or the index of
    /// the first partial row.
    pub fn to_weighted(&self) -> Result<WeightedRankings> {
        let mut rankings = Vec::with_capacity(self.rows.len());
        let mut counts = Vec::with_capacity(self.rows.len());
        for (row, r) in self.rows.iter().enumerate() {
            let full = r.ranking.to_full().ok_or(Error::PartialRow { row })?;
            rankings.push(full);
            counts.push(r.count as f64);
        }
        WeightedRankings::new(rankings, counts)
    }
}

pub fn default_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("item{i}")).collect()
}

/// Full rankings with nonnegative real multiplicities. This is the form
/// the estimation steps consume: either a dataset's full rows or the
/// augmented completion table of a partial dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedRankings {
    rankings: Vec<Ranking>,
    counts: Vec<f64>,
}

impl WeightedRankings {
    pub fn new(rankings: Vec<Ranking>, counts: Vec<f64>) -> Result<Self> {
        if rankings.is_empty() {
            return Err(Error::EmptyDataset);
        }
        check_dims(rankings.len(), counts.len())?;
        let n = rankings[0].n();
        for r in &rankings {
            check_dims(n, r.n())?;
        }
        if let Some(i) = counts.iter().position(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::NonFinite(i));
        }
        Ok(WeightedRankings { rankings, counts })
    }

    pub fn n(&self) -> usize {
        self.rankings[0].n()
    }

    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }

    pub fn rankings(&self) -> &[Ranking] {
        &self.rankings
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Average assigned rank per item.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanRankVector {
    pub values: Vec<f64>,
    pub weight_total: f64,
}

impl MeanRankVector {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// `mᵀr` for a full ranking `r`.
    pub fn scalar_product(&self, r: &Ranking) -> Result<f64> {
        check_dims(self.n(), r.n())?;
        Ok(self.values.iter().zip(r.ranks()).map(|(&m, &x)| m * x as f64).sum())
    }
}

/// Weighted mean rank vector `Σ_l N_l w_l r_l / Σ_l N_l w_l`.
///
/// Fails with [`Error::ZeroWeight`] when the combined weight vanishes, which
/// is how an empty mixture component shows up.
pub fn weighted_mean_rank(data: &WeightedRankings, weights: &[f64]) -> Result<MeanRankVector> {
    check_dims(data.len(), weights.len())?;
    let n = data.n();
    let mut sums = vec![0.0; n];
    let mut total = 0.0;
    for ((r, &count), &w) in data.rankings().iter().zip(data.counts()).zip(weights) {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidArgument(format!("weight {w} is not a nonnegative real")));
        }
        let cw = count * w;
        if cw == 0.0 {
            continue;
        }
        total += cw;
        for (s, &x) in sums.iter_mut().zip(r.ranks()) {
            *s += cw * x as f64;
        }
    }
    if total <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    Ok(MeanRankVector { values: sums.into_iter().map(|s| s / total).collect(), weight_total: total })
}

/// How equal mean ranks are ordered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// The item with the smaller index gets the better rank.
    #[default]
    SmallestIndex,
    /// Tied items are shuffled with a generator seeded by `seed`.
    Random { seed: u64 },
}

/// Borda aggregation: rank items by increasing mean rank. The result
/// maximizes `ρᵀm` over all permutations `ρ`.
pub fn borda_rank(m: &MeanRankVector, ties: TiePolicy) -> Result<Ranking> {
    rank_values(&m.values, false, ties)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Rank 1 goes to the smallest value.
    #[value(alias = "asc")]
    Ascending,
    /// Rank 1 goes to the largest value.
    #[value(alias = "desc")]
    Descending,
}

/// Converts a vector of measurements into a ranking; ties go to the
/// smaller index first.
pub fn rankify(values: &[f64], direction: Direction) -> Result<Ranking> {
    rank_values(values, direction == Direction::Descending, TiePolicy::SmallestIndex)
}

fn rank_values(values: &[f64], descending: bool, ties: TiePolicy) -> Result<Ranking> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    // Stable sort keeps index order inside tie groups.
    order.sort_by(|&a, &b| {
        let ord = values[a].total_cmp(&values[b]);
        if descending {
            ord.reverse()
        } else {
            ord
        }
    });
    if let TiePolicy::Random { seed } = ties {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut start = 0;
        while start < order.len() {
            let mut end = start + 1;
            while end < order.len() && values[order[end]] == values[order[start]] {
                end += 1;
            }
            order[start..end].shuffle(&mut rng);
            start = end;
        }
    }
    let mut ranks = vec![0u32; values.len()];
    for (pos, &item) in order.iter().enumerate() {
        ranks[item] = pos as u32 + 1;
    }
    Ranking::new(ranks)
}

/// Lexicographic successor of a slice, returning `false` after the last
/// permutation.
pub(crate) fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Every permutation of `1..=n` in lexicographic order.
pub fn all_rankings(n: usize) -> impl Iterator<Item = Ranking> {
    let mut current: Option<Vec<u32>> = Some((1..=n as u32).collect());
    std::iter::from_fn(move || {
        let out = current.take()?;
        let mut next = out.clone();
        if next_permutation(&mut next) {
            current = Some(next);
        }
        Some(Ranking(out))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(v: &[u32]) -> Ranking {
        Ranking::new(v.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(spearman_distance(&r(&[1, 2, 3]), &r(&[1, 2, 3])).unwrap(), 0);
        assert_eq!(spearman_distance(&r(&[3, 2, 1]), &r(&[1, 2, 3])).unwrap(), 8);
        assert_eq!(d_max(3), 8);
        assert_eq!(spearman_distance(&r(&[2, 1, 3]), &r(&[1, 2, 3])).unwrap(), 2);
        assert!(matches!(
            spearman_distance(&r(&[1, 2]), &r(&[1, 2, 3])),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn scalar_product_examples() {
        assert_eq!(c_n(3), 14);
        assert_eq!(scalar_product(&r(&[1, 2, 3]), &r(&[1, 2, 3])).unwrap(), 14);
        assert_eq!(scalar_product(&r(&[1, 2, 3]), &r(&[3, 2, 1])).unwrap(), 10);
        assert_eq!(scalar_product(&r(&[2, 1, 3]), &r(&[1, 2, 3])).unwrap(), 13);
        let m = MeanRankVector { values: vec![1.5, 1.5, 3.0], weight_total: 4.0 };
        assert_eq!(m.scalar_product(&r(&[1, 2, 3])).unwrap(), 13.5);
    }

    #[test]
    fn ranking_validation() {
        assert!(Ranking::new(vec![1]).is_err());
        assert!(Ranking::new(vec![1, 1, 2]).is_err());
        assert!(Ranking::new(vec![0, 1, 2]).is_err());
        assert!(Ranking::new(vec![1, 2, 4]).is_err());
        assert!(PartialRanking::new(vec![None, None]).is_err());
        assert!(PartialRanking::new(vec![Some(2), None, Some(2)]).is_err());
        let p = PartialRanking::new(vec![Some(1), Some(2), None, None]).unwrap();
        assert_eq!(p.ranked_items(), vec![0, 1]);
        assert_eq!(p.missing_ranks(), vec![3, 4]);
        assert_eq!(p.completion_count(), 2);
        assert!(!p.is_full());
    }

    #[test]
    fn weighted_mean_examples() {
        let data = WeightedRankings::new(vec![r(&[1, 2, 3]), r(&[2, 1, 3])], vec![2.0, 2.0]).unwrap();
        let m = weighted_mean_rank(&data, &[1.0, 1.0]).unwrap();
        assert_eq!(m.values, vec![1.5, 1.5, 3.0]);

        let single = WeightedRankings::new(vec![r(&[3, 1, 2])], vec![1.0]).unwrap();
        assert_eq!(weighted_mean_rank(&single, &[1.0]).unwrap().values, vec![3.0, 1.0, 2.0]);

        let mix = WeightedRankings::new(vec![r(&[1, 2, 3]), r(&[3, 2, 1])], vec![1.0, 1.0]).unwrap();
        let m = weighted_mean_rank(&mix, &[0.25, 0.75]).unwrap();
        assert_eq!(m.values, vec![2.5, 2.0, 1.5]);

        assert!(matches!(weighted_mean_rank(&mix, &[0.0, 0.0]), Err(Error::ZeroWeight)));
    }

    #[test]
    fn borda_examples() {
        let m = |v: Vec<f64>| MeanRankVector { values: v, weight_total: 1.0 };
        assert_eq!(borda_rank(&m(vec![2.1, 1.5, 2.4]), TiePolicy::SmallestIndex).unwrap(), r(&[2, 1, 3]));
        assert_eq!(borda_rank(&m(vec![1.5, 1.5, 3.0]), TiePolicy::SmallestIndex).unwrap(), r(&[1, 2, 3]));
        let seeded = borda_rank(&m(vec![1.5, 1.5, 3.0]), TiePolicy::Random { seed: 9 }).unwrap();
        assert_eq!(seeded.ranks()[2], 3);
        assert_eq!(seeded, borda_rank(&m(vec![1.5, 1.5, 3.0]), TiePolicy::Random { seed: 9 }).unwrap());
    }

    #[test]
    fn rankify_examples() {
        assert_eq!(rankify(&[0.1, 9.0, 3.0], Direction::Descending).unwrap(), r(&[3, 1, 2]));
        assert_eq!(rankify(&[5.0, 5.0, 1.0], Direction::Ascending).unwrap(), r(&[2, 3, 1]));
        assert_eq!(rankify(&[-2.0, 0.0, 0.5, 7.0], Direction::Ascending).unwrap(), Ranking::identity(4));
        assert!(matches!(rankify(&[1.0, f64::NAN], Direction::Ascending), Err(Error::NonFinite(1))));
    }

    #[test]
    fn uniform_weights_over_all_permutations_give_constant_mean() {
        for n in 2..=5 {
            let all: Vec<Ranking> = all_rankings(n).collect();
            let count = all.len();
            let data = WeightedRankings::new(all, vec![1.0; count]).unwrap();
            let m = weighted_mean_rank(&data, &vec![1.0; count]).unwrap();
            for v in m.values {
                assert!((v - (n as f64 + 1.0) / 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn right_invariance_exhaustive() {
        for n in 2..=5 {
            let all: Vec<Ranking> = all_rankings(n).collect();
            let dm = d_max(n);
            for a in &all {
                for b in &all {
                    let d = spearman_distance(a, b).unwrap();
                    assert_eq!(d % 2, 0);
                    assert_eq!(d + spearman_distance(a, &b.reverse_ranks()).unwrap(), dm);
                    if n <= 4 {
                        for s in &all {
                            let d2 = spearman_distance(&a.compose(s).unwrap(), &b.compose(s).unwrap()).unwrap();
                            assert_eq!(d, d2);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn all_rankings_count() {
        assert_eq!(all_rankings(5).count(), 120);
        assert_eq!(all_rankings(2).collect::<Vec<_>>(), vec![r(&[1, 2]), r(&[2, 1])]);
    }

    #[test]
    fn dataset_aggregates_duplicates() {
        let p = |v: &[u32]| PartialRanking::from(r(v));
        let ds =
            RankingDataset::new(default_labels(3), vec![(p(&[1, 2, 3]), 1), (p(&[2, 1, 3]), 1), (p(&[1, 2, 3]), 1)])
                .unwrap();
        assert_eq!(ds.rows().len(), 2);
        assert_eq!(ds.rows()[0].count, 2);
        assert_eq!(ds.total(), 3);
        assert!(RankingDataset::new(default_labels(3), Vec::new()).is_err());
    }

    fn arb_ranking(n: usize) -> impl Strategy<Value = Ranking> {
        Just((1..=n as u32).collect::<Vec<_>>()).prop_shuffle().prop_map(Ranking::from_vec_unchecked)
    }

    fn arb_pair() -> impl Strategy<Value = (Ranking, Ranking, Ranking)> {
        (2usize..12).prop_flat_map(|n| (arb_ranking(n), arb_ranking(n), arb_ranking(n)))
    }

    proptest! {
        #[test]
        fn distance_is_a_right_invariant_metric((a, b, s) in arb_pair()) {
            let d = spearman_distance(&a, &b).unwrap();
            prop_assert_eq!(d, spearman_distance(&b, &a).unwrap());
            prop_assert_eq!(d == 0, a == b);
            prop_assert_eq!(d % 2, 0);
            prop_assert!(d <= d_max(a.n()));
            let n = a.n();
            prop_assert_eq!(d, 2 * (c_n(n) - scalar_product(&a, &b).unwrap()));
            prop_assert_eq!(d, spearman_distance(&a.compose(&s).unwrap(), &b.compose(&s).unwrap()).unwrap());
            prop_assert_eq!(d + spearman_distance(&a, &b.reverse_ranks()).unwrap(), d_max(n));
        }

        #[test]
        fn borda_is_always_a_permutation(values in prop::collection::vec(-5.0f64..5.0, 2..20)) {
            let m = MeanRankVector { values: values.clone(), weight_total: 1.0 };
            let rho = borda_rank(&m, TiePolicy::SmallestIndex).unwrap();
            prop_assert!(Ranking::new(rho.ranks().to_vec()).is_ok());
            // Increasing values receive nondecreasing ranks.
            for i in 0..values.len() {
                for j in 0..values.len() {
                    if values[i] < values[j] {
                        prop_assert!(rho.ranks()[i] < rho.ranks()[j]);
                    }
                }
            }
        }
    }
}
