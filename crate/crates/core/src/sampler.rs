//! Drawing rankings from a Mallows model with Spearman distance.
//!
//! Two samplers: inverse-CDF over the enumerated pmf for `n <= 8`, and a
//! Metropolis chain whose proposal swaps the ranks of two items. The two
//! items are drawn independently, so with probability `1/n` the proposal is
//! the identity; that laziness keeps the chain aperiodic (a strict
//! transposition always flips the permutation parity).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{log_kernel, MmsParams};
use crate::ranking::{all_rankings, default_labels, PartialRanking, Ranking, RankingDataset};

pub const MAX_EXHAUSTIVE_N: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMethod {
    Exhaustive,
    Mcmc(McmcConfig),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct McmcConfig {
    /// Defaults to `100 n` steps.
    pub burn_in: Option<usize>,
    /// Steps between recorded draws; defaults to `max(1, n² / 2)`.
    pub thin: Option<usize>,
}

impl McmcConfig {
    pub fn burn_in_for(&self, n: usize) -> usize {
        self.burn_in.unwrap_or(100 * n)
    }

    pub fn thin_for(&self, n: usize) -> usize {
        self.thin.unwrap_or((n * n / 2).max(1)).max(1)
    }
}

/// Exhaustive for `n <= 8`, Metropolis above.
pub fn default_method(n: usize) -> SamplerMethod {
    if n <= MAX_EXHAUSTIVE_N {
        SamplerMethod::Exhaustive
    } else {
        SamplerMethod::Mcmc(McmcConfig::default())
    }
}

/// `count` independent-seeded draws collected into a dataset.
pub fn sample_mms(params: &MmsParams, count: usize, method: SamplerMethod, seed: u64) -> Result<RankingDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = sample_rankings(params, count, method, &mut rng)?;
    RankingDataset::new(default_labels(params.n()), draws.into_iter().map(|r| (PartialRanking::from(r), 1)))
}

/// Draws in generation order, for callers that track unit-level labels.
pub fn sample_rankings<R: Rng + ?Sized>(
    params: &MmsParams,
    count: usize,
    method: SamplerMethod,
    rng: &mut R,
) -> Result<Vec<Ranking>> {
    match method {
        SamplerMethod::Exhaustive => exhaustive(params, count, rng),
        SamplerMethod::Mcmc(cfg) => Ok(metropolis(params, count, &cfg, rng)),
    }
}

fn exhaustive<R: Rng + ?Sized>(params: &MmsParams, count: usize, rng: &mut R) -> Result<Vec<Ranking>> {
    let n = params.n();
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::InvalidArgument(format!(
            "exhaustive sampling supports n <= {MAX_EXHAUSTIVE_N}, got n = {n}"
        )));
    }
    let support: Vec<Ranking> = all_rankings(n).collect();
    let logw: Vec<f64> = support.iter().map(|r| log_kernel(params, r)).collect();
    let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut cdf = Vec::with_capacity(support.len());
    let mut acc = 0.0;
    for w in &logw {
        acc += (w - m).exp();
        cdf.push(acc);
    }
    let total = acc;
    Ok((0..count)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            let i = cdf.partition_point(|&c| c <= u).min(support.len() - 1);
            support[i].clone()
        })
        .collect())
}

fn metropolis<R: Rng + ?Sized>(params: &MmsParams, count: usize, cfg: &McmcConfig, rng: &mut R) -> Vec<Ranking> {
    let n = params.n();
    let rho = params.consensus.ranks();
    let theta = params.theta;
    let mut state = Ranking::random(n, rng).into_inner();
    let step = |state: &mut Vec<u32>, rng: &mut R| {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j {
            return;
        }
        // d(r', ρ) - d(r, ρ) after swapping r_i and r_j.
        let delta = 2 * (state[i] as i64 - state[j] as i64) * (rho[i] as i64 - rho[j] as i64);
        if delta <= 0 || rng.random::<f64>() < (-theta * delta as f64).exp() {
            state.swap(i, j);
        }
    };
    for _ in 0..cfg.burn_in_for(n) {
        step(&mut state, rng);
    }
    let thin = cfg.thin_for(n);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..thin {
            step(&mut state, rng);
        }
        out.push(Ranking::from_vec_unchecked(state.clone()));
    }
    out
}
