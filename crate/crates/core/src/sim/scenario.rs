//! Drawing synthetic mixtures and censoring them.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::MixtureParams;
use crate::model::MmsParams;
use crate::ranking::{spearman_distance, PartialRanking, Ranking, RankingDataset};
use crate::sampler::{sample_rankings, SamplerMethod};

/// Draws allowed when searching for well-separated consensus rankings.
pub const REJECTION_BUDGET: usize = 100_000;

/// Depths 2..=6 of bottom censoring.
pub const CENSOR_DEPTHS: [usize; 5] = [2, 3, 4, 5, 6];
pub const PATTERN_A: [f64; 5] = [0.1, 0.1, 0.1, 0.1, 0.6];
pub const PATTERN_B: [f64; 5] = [0.1, 0.2, 0.4, 0.2, 0.1];

/// How full rankings are turned into partial ones.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Censoring {
    #[default]
    None,
    /// Bottom depth drawn from [`PATTERN_A`].
    #[serde(alias = "A")]
    A,
    /// Bottom depth drawn from [`PATTERN_B`].
    #[serde(alias = "B")]
    B,
    /// Only ranks `1..=q` are kept.
    TopQ(usize),
}

/// A drawn mixture with unit-level data and labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub truth: MixtureParams,
    pub units: Vec<PartialRanking>,
    /// True component of each unit.
    pub labels: Vec<usize>,
    pub items: Vec<String>,
}

impl Scenario {
    pub fn dataset(&self) -> Result<RankingDataset> {
        RankingDataset::new(self.items.clone(), self.units.iter().map(|u| (u.clone(), 1)))
    }

    /// Index of each unit's row in [`Scenario::dataset`].
    pub fn unit_rows(&self, data: &RankingDataset) -> Vec<usize> {
        let index: HashMap<&PartialRanking, usize> =
            data.rows().iter().enumerate().map(|(i, r)| (&r.ranking, i)).collect();
        self.units.iter().map(|u| index[u]).collect()
    }
}

/// Symmetric Dirichlet draw through normalized Gamma variates.
pub fn dirichlet<R: Rng + ?Sized>(alpha: f64, g: usize, rng: &mut R) -> Result<Vec<f64>> {
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut w: Vec<f64> = (0..g).map(|_| gamma.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    Ok(w)
}

/// `g` uniform rankings, pairwise at Spearman distance at least
/// `min_distance`, built one at a time; each candidate far from all accepted
/// ones is kept.
pub fn separated_consensus<R: Rng + ?Sized>(
    n: usize,
    g: usize,
    min_distance: u64,
    rng: &mut R,
) -> Result<Vec<Ranking>> {
    let mut out: Vec<Ranking> = Vec::with_capacity(g);
    let mut draws = 0;
    while out.len() < g {
        if draws == REJECTION_BUDGET {
            return Err(Error::RejectionBudget(REJECTION_BUDGET));
        }
        draws += 1;
        let cand = Ranking::random(n, rng);
        if out.iter().all(|r| spearman_distance(r, &cand).is_ok_and(|d| d >= min_distance)) {
            out.push(cand);
        }
    }
    Ok(out)
}

/// Inputs of [`draw_mixture_scenario`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixtureDraw {
    pub n: usize,
    pub sample_size: usize,
    pub g: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub min_distance: u64,
    pub sampler: SamplerMethod,
}

/// Weights from Dirichlet(2G, ..., 2G), consensus rankings by rejection,
/// `θ_g ~ U(θ_min, θ_max)`, and component sizes multinomial in the weights.
pub fn draw_mixture_scenario<R: Rng + ?Sized>(spec: &MixtureDraw, rng: &mut R) -> Result<Scenario> {
    if spec.g == 0 || spec.sample_size == 0 || !(spec.theta_min >= 0.0 && spec.theta_min < spec.theta_max) {
        return Err(Error::InvalidArgument(format!(
            "need G >= 1, N >= 1 and 0 <= theta_min < theta_max, got G = {}, N = {}, [{}, {}]",
            spec.g, spec.sample_size, spec.theta_min, spec.theta_max
        )));
    }
    let weights = if spec.g == 1 { vec![1.0] } else { dirichlet(2.0 * spec.g as f64, spec.g, rng)? };
    let consensus = separated_consensus(spec.n, spec.g, spec.min_distance, rng)?;
    let components = consensus
        .into_iter()
        .map(|c| MmsParams::new(c, rng.random_range(spec.theta_min..spec.theta_max)))
        .collect::<Result<Vec<_>>>()?;
    let truth = MixtureParams::new(weights, components)?;
    let mut sizes = vec![0usize; spec.g];
    for _ in 0..spec.sample_size {
        sizes[categorical(&truth.weights, rng)] += 1;
    }
    let mut units = Vec::with_capacity(spec.sample_size);
    let mut labels = Vec::with_capacity(spec.sample_size);
    for (k, &size) in sizes.iter().enumerate() {
        if size == 0 {
            continue;
        }
        let draws = sample_rankings(&truth.components[k], size, spec.sampler, rng)?;
        units.extend(draws.into_iter().map(PartialRanking::from));
        labels.extend(std::iter::repeat_n(k, size));
    }
    Ok(Scenario { truth, units, labels, items: crate::ranking::default_labels(spec.n) })
}

fn categorical<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in p.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Blanks the bottom positions of each ranking according to `pattern`.
pub fn censor<R: Rng + ?Sized>(
    units: &[PartialRanking],
    pattern: Censoring,
    rng: &mut R,
) -> Result<Vec<PartialRanking>> {
    let Some(first) = units.first() else { return Ok(Vec::new()) };
    let n = first.n();
    let masses = match pattern {
        Censoring::None => return Ok(units.to_vec()),
        Censoring::A => PATTERN_A,
        Censoring::B => PATTERN_B,
        Censoring::TopQ(q) => {
            if q == 0 || q > n {
                return Err(Error::InvalidArgument(format!("top-q censoring needs 1 <= q <= {n}, got {q}")));
            }
            return units.iter().map(|u| keep_top(u, q as u32)).collect();
        }
    };
    let deepest = CENSOR_DEPTHS[CENSOR_DEPTHS.len() - 1];
    if n <= deepest {
        return Err(Error::InvalidArgument(format!(
            "bottom censoring up to depth {deepest} needs n > {deepest}, got n = {n}"
        )));
    }
    units
        .iter()
        .map(|u| {
            let depth = CENSOR_DEPTHS[categorical(&masses, rng)];
            keep_top(u, (n - depth) as u32)
        })
        .collect()
}

fn keep_top(u: &PartialRanking, q: u32) -> Result<PartialRanking> {
    PartialRanking::new(u.ranks().iter().map(|r| r.filter(|&r| r <= q)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::d_max;
    use crate::sampler::default_method;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(g: usize) -> MixtureDraw {
        MixtureDraw {
            n: 25,
            sample_size: 300,
            g,
            theta_min: 0.004,
            theta_max: 0.006,
            min_distance: 208,
            sampler: default_method(25),
        }
    }

    #[test]
    fn single_component_has_unit_weight() {
        let s = draw_mixture_scenario(&spec(1), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(s.truth.weights, vec![1.0]);
        assert!(s.labels.iter().all(|&l| l == 0));
        assert_eq!(s.units.len(), 300);
    }

    #[test]
    fn consensus_rankings_are_separated() {
        for seed in 0..5 {
            let s = draw_mixture_scenario(&spec(4), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let c: Vec<_> = s.truth.components.iter().map(|c| &c.consensus).collect();
            for i in 0..4 {
                for j in 0..i {
                    assert!(spearman_distance(c[i], c[j]).unwrap() >= 208);
                }
            }
            for comp in &s.truth.components {
                assert!((0.004..0.006).contains(&comp.theta));
            }
            assert!((s.truth.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn infeasible_separation_exhausts_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let res = separated_consensus(4, 3, d_max(4), &mut rng);
        assert!(matches!(res, Err(Error::RejectionBudget(REJECTION_BUDGET))));
    }

    #[test]
    fn same_seed_same_data() {
        let a = draw_mixture_scenario(&spec(2), &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = draw_mixture_scenario(&spec(2), &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        let c = draw_mixture_scenario(&spec(2), &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_ne!(a.units, c.units);
    }

    #[test]
    fn unit_rows_point_at_their_row() {
        let mut s = draw_mixture_scenario(&spec(2), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        s.units = censor(&s.units, Censoring::TopQ(2), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let data = s.dataset().unwrap();
        for (u, &row) in s.units.iter().zip(&s.unit_rows(&data)) {
            assert_eq!(&data.rows()[row].ranking, u);
        }
    }

    #[test]
    fn top_q_keeps_leading_ranks() {
        let units: Vec<PartialRanking> = vec![PartialRanking::from(Ranking::new(vec![3, 1, 4, 2, 5]).unwrap())];
        let out = censor(&units, Censoring::TopQ(4), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out[0].ranks(), [Some(3), Some(1), Some(4), Some(2), None]);
        assert!(censor(&units, Censoring::TopQ(0), &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        assert!(censor(&units, Censoring::A, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn pattern_depths_follow_masses() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10;
        let units: Vec<PartialRanking> = (0..20_000).map(|_| Ranking::random(n, &mut rng).into()).collect();
        for (pattern, masses) in [(Censoring::A, PATTERN_A), (Censoring::B, PATTERN_B)] {
            let out = censor(&units, pattern, &mut rng).unwrap();
            let mut freq = [0usize; 5];
            for (orig, cut) in units.iter().zip(&out) {
                let depth = n - cut.num_ranked();
                freq[depth - 2] += 1;
                // Retained ranks are untouched.
                for (a, b) in orig.ranks().iter().zip(cut.ranks()) {
                    assert!(b.is_none() || a == b);
                }
                assert!(cut.ranks().iter().flatten().all(|&r| r as usize <= n - depth));
            }
            for (f, p) in freq.iter().zip(masses) {
                let band = 4.0 * (p * (1.0 - p) / 20_000.0).sqrt();
                assert!((*f as f64 / 20_000.0 - p).abs() < band, "{pattern:?} {freq:?}");
            }
        }
    }
}
