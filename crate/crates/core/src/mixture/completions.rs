//! Full rankings compatible with a partial ranking.

use crate::error::{Error, Result};
use crate::ranking::{next_permutation, PartialRanking, Ranking};

/// Default cap on completions per row, `8! = 40320`.
pub const DEFAULT_COMPLETION_CAP: u128 = 40_320;

/// Lazily enumerates every assignment of the missing ranks to the unranked
/// items, in lexicographic order of the assigned ranks.
#[derive(Clone, Debug)]
pub struct Completions {
    base: Vec<u32>,
    slots: Vec<usize>,
    fill: Vec<u32>,
    done: bool,
}

impl Iterator for Completions {
    type Item = Ranking;

    fn next(&mut self) -> Option<Ranking> {
        if self.done {
            return None;
        }
        let mut ranks = self.base.clone();
        for (&slot, &r) in self.slots.iter().zip(&self.fill) {
            ranks[slot] = r;
        }
        self.done = !next_permutation(&mut self.fill);
        Some(Ranking::from_vec_unchecked(ranks))
    }
}

/// Completions of row `row` (used only to label the error) under `cap`.
pub fn completions(p: &PartialRanking, cap: u128, row: usize) -> Result<Completions> {
    let count = p.completion_count();
    if count > cap {
        return Err(Error::CompletionCapExceeded { row, count, cap });
    }
    let base: Vec<u32> = p.ranks().iter().map(|r| r.unwrap_or(0)).collect();
    let mut fill = p.missing_ranks();
    fill.sort_unstable();
    Ok(Completions { base, slots: p.unranked_items(), fill, done: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn partial(v: &[Option<u32>]) -> PartialRanking {
        PartialRanking::new(v.to_vec()).unwrap()
    }

    fn set(p: &PartialRanking) -> Vec<Vec<u32>> {
        completions(p, DEFAULT_COMPLETION_CAP, 0).unwrap().map(Ranking::into_inner).collect()
    }

    #[test]
    fn top_two_of_four() {
        let p = partial(&[Some(1), Some(2), None, None]);
        assert_eq!(set(&p), vec![vec![1, 2, 3, 4], vec![1, 2, 4, 3]]);
    }

    #[test]
    fn shared_membership() {
        let target = vec![1, 2, 4, 3];
        assert!(set(&partial(&[Some(1), Some(2), None, None])).contains(&target));
        let wide = set(&partial(&[Some(1), None, None, None]));
        assert_eq!(wide.len(), 6);
        assert!(wide.contains(&target));
    }

    #[test]
    fn full_ranking_is_singleton() {
        let p = partial(&[Some(3), Some(1), Some(2)]);
        assert_eq!(set(&p), vec![vec![3, 1, 2]]);
    }

    #[test]
    fn interior_missing_ranks() {
        let p = partial(&[None, Some(2), None, Some(4)]);
        assert_eq!(set(&p), vec![vec![1, 2, 3, 4], vec![3, 2, 1, 4]]);
    }

    #[test]
    fn cap_is_enforced() {
        let p = partial(&[Some(1), None, None, None, None]);
        assert!(matches!(completions(&p, 23, 7), Err(Error::CompletionCapExceeded { row: 7, count: 24, cap: 23 })));
        assert_eq!(completions(&p, 24, 7).unwrap().count(), 24);
    }
}
