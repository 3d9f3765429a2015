//! Finite mixtures of Mallows models with Spearman distance, fitted by EM.
//!
//! Full and partial data go through one loop. Every observed row `l` is
//! expanded into its set `C_l` of compatible full rankings (a singleton for a
//! full row). With `f_g(m) = ω_g P(m | ρ_g, θ_g)` and `f(m) = Σ_g f_g(m)`:
//!
//! * the observed-data log-likelihood is `Σ_l N_l log Σ_{m ∈ C_l} f(m)`;
//! * each row's count is spread over its completions in proportion to
//!   `f(m)`, giving augmented frequencies `N̂_m`;
//! * completion `m` belongs to component `g` with probability `f_g(m)/f(m)`;
//! * the M-step refits every component on the augmented table with those
//!   weights (Borda consensus, then `θ` from the mean distance).

mod bic;
mod completions;

use std::collections::HashMap;

use log::warn;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{fit_mean_rank, fit_mms_weighted, log_kernel_ranks, MmsParams};
use crate::partition::{solve_theta, BoundaryFlag, DistanceModel, SolverConfig};
use crate::ranking::{d_max, MeanRankVector, PartialRanking, Ranking, RankingDataset, WeightedRankings};

pub use bic::{bic, elbow_index, parameter_count, select_g, BicConvention, Selection};
pub use completions::{completions, Completions, DEFAULT_COMPLETION_CAP};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub weights: Vec<f64>,
    pub components: Vec<MmsParams>,
}

impl MixtureParams {
    pub fn new(weights: Vec<f64>, components: Vec<MmsParams>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::DimensionMismatch { expected: components.len(), found: weights.len() });
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidArgument("mixture weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("mixture weights sum to {total}, not 1")));
        }
        let n = components[0].n();
        if let Some(c) = components.iter().find(|c| c.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: c.n() });
        }
        Ok(MixtureParams { weights, components })
    }

    pub fn g(&self) -> usize {
        self.weights.len()
    }

    pub fn n(&self) -> usize {
        self.components[0].n()
    }

    /// Same mixture with components reordered: `perm[k]` is the old index of
    /// the new component `k`.
    pub fn permuted(&self, perm: &[usize]) -> MixtureParams {
        MixtureParams {
            weights: perm.iter().map(|&k| self.weights[k]).collect(),
            components: perm.iter().map(|&k| self.components[k].clone()).collect(),
        }
    }

    /// `log ω_g - log Z(θ_g)` per component.
    fn log_offsets(&self, model: &dyn DistanceModel) -> Vec<f64> {
        self.weights.iter().zip(&self.components).map(|(w, c)| w.ln() - model.log_partition(c.theta)).collect()
    }
}

/// Posterior membership probabilities, one row per observation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Responsibilities {
    g: usize,
    values: Vec<f64>,
}

impl Responsibilities {
    fn from_rows(g: usize, rows: Vec<Vec<f64>>) -> Self {
        Responsibilities { g, values: rows.into_iter().flatten().collect() }
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.g.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, l: usize) -> &[f64] {
        &self.values[l * self.g..(l + 1) * self.g]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.g)
    }

    /// Column `g` as a vector.
    pub fn column(&self, g: usize) -> Vec<f64> {
        self.rows().map(|r| r[g]).collect()
    }

    /// Maximum-a-posteriori component of every row (ties to the lower index).
    pub fn map_labels(&self) -> Vec<usize> {
        self.rows()
            .map(|r| {
                let mut best = 0;
                for (k, &v) in r.iter().enumerate() {
                    if v > r[best] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }
}

/// Distinct full rankings reached by the completions of a dataset, with
/// their augmented frequencies `N̂_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompletionTable {
    pub rankings: Vec<Ranking>,
    pub counts: Vec<f64>,
}

impl CompletionTable {
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn to_weighted(&self) -> Result<WeightedRankings> {
        WeightedRankings::new(self.rankings.clone(), self.counts.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub n_starts: usize,
    pub seed: u64,
    pub completion_cap: u128,
    pub solver: SolverConfig,
    /// A component is empty when `N̂_g < empty_fraction · N`.
    pub empty_fraction: f64,
    /// Re-seeds of one component before it is dropped.
    pub max_reseeds: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            tol: 1e-6,
            max_iter: 500,
            n_starts: 10,
            seed: 0,
            completion_cap: DEFAULT_COMPLETION_CAP,
            solver: SolverConfig::default(),
            empty_fraction: 1e-6,
            max_reseeds: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    pub params: MixtureParams,
    /// Posteriors of the observed rows, in dataset order.
    pub responsibilities: Responsibilities,
    pub log_lik: f64,
    /// BIC under [`BicConvention::Full`].
    pub bic: f64,
    pub bic_continuous: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `N̂_g = Σ_l N_l ẑ_lg`.
    pub cluster_sizes: Vec<f64>,
    /// Observed-data log-likelihood after each E-step.
    pub trace: Vec<f64>,
    /// Iterations (indices into `trace`) preceded by a re-seed or a drop.
    pub disrupted: Vec<usize>,
    pub boundary: Vec<BoundaryFlag>,
    /// Index of the random start that produced the fit.
    pub start: usize,
    pub sample_size: f64,
}

impl MixtureFit {
    /// Largest decrease between consecutive undisrupted iterations.
    pub fn max_decrease(&self) -> f64 {
        self.trace
            .windows(2)
            .enumerate()
            .filter(|(i, _)| !self.disrupted.contains(&(i + 1)))
            .map(|(_, w)| w[0] - w[1])
            .fold(0.0, f64::max)
    }
}

/// A dataset expanded into distinct completions, stored row-major with `n`
/// ranks each. Every data row keeps its multiplicity and the indices of its
/// compatible completions; full data has one completion per row.
struct Augmented {
    n: usize,
    ranks: Vec<u32>,
    rows: Vec<(f64, Vec<usize>)>,
    total: f64,
}

impl Augmented {
    fn build(data: &RankingDataset, cap: u128) -> Result<Self> {
        let mut index: HashMap<Ranking, usize> = HashMap::new();
        let mut ranks = Vec::new();
        let mut rows = Vec::with_capacity(data.rows().len());
        for (l, row) in data.rows().iter().enumerate() {
            let mut members = Vec::new();
            for m in completions(&row.ranking, cap, l)? {
                let at = match index.get(&m) {
                    Some(&at) => at,
                    None => {
                        let at = index.len();
                        ranks.extend_from_slice(m.ranks());
                        index.insert(m, at);
                        at
                    }
                };
                members.push(at);
            }
            rows.push((row.count as f64, members));
        }
        Ok(Augmented { n: data.n_items(), ranks, rows, total: data.total() as f64 })
    }

    fn from_weighted(data: &WeightedRankings) -> Self {
        Augmented {
            n: data.n(),
            ranks: data.rankings().iter().flat_map(|r| r.ranks().iter().copied()).collect(),
            rows: data.counts().iter().enumerate().map(|(i, &c)| (c, vec![i])).collect(),
            total: data.total(),
        }
    }

    fn len(&self) -> usize {
        self.ranks.len() / self.n
    }

    fn ranking(&self, a: usize) -> &[u32] {
        &self.ranks[a * self.n..(a + 1) * self.n]
    }

    fn rankings(&self) -> Vec<Ranking> {
        self.ranks.chunks(self.n).map(|r| Ranking::from_vec_unchecked(r.to_vec())).collect()
    }
}

/// Completions per parallel work unit. Partial sums are combined in chunk
/// order, so results do not depend on the thread count.
const CHUNK: usize = 4096;

/// E-step quantities. `posterior` is `completions x G` row-major.
struct EStep {
    g: usize,
    log_lik: f64,
    augmented: Vec<f64>,
    posterior: Vec<f64>,
    row_resp: Vec<Vec<f64>>,
    log_mix: Vec<f64>,
}

fn e_step_augmented(aug: &Augmented, params: &MixtureParams, model: &dyn DistanceModel) -> EStep {
    let g = params.g();
    let offsets = params.log_offsets(model);
    let mut joint = vec![0.0; aug.len() * g];
    joint.par_chunks_mut(CHUNK * g).enumerate().for_each(|(c, out)| {
        for (i, row) in out.chunks_mut(g).enumerate() {
            let r = aug.ranking(c * CHUNK + i);
            for ((v, comp), o) in row.iter_mut().zip(&params.components).zip(&offsets) {
                *v = o + log_kernel_ranks(comp.theta, comp.consensus.ranks(), r);
            }
        }
    });
    let mut log_mix = vec![0.0; aug.len()];
    let mut posterior = joint;
    for (p, lm) in posterior.chunks_mut(g).zip(log_mix.iter_mut()) {
        let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in p.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        p.iter_mut().for_each(|v| *v /= sum);
        *lm = max + sum.ln();
    }
    let mut augmented = vec![0.0; aug.len()];
    let mut row_resp = Vec::with_capacity(aug.rows.len());
    let mut log_lik = 0.0;
    let mut share = Vec::new();
    for (count, members) in &aug.rows {
        if let [m] = members[..] {
            log_lik += count * log_mix[m];
            augmented[m] += count;
            row_resp.push(posterior[m * g..(m + 1) * g].to_vec());
            continue;
        }
        // Share of each completion in the row's mixture mass.
        let max = members.iter().map(|&m| log_mix[m]).fold(f64::NEG_INFINITY, f64::max);
        share.clear();
        share.extend(members.iter().map(|&m| (log_mix[m] - max).exp()));
        let sum: f64 = share.iter().sum();
        log_lik += count * (max + sum.ln());
        let mut resp = vec![0.0; g];
        for (&m, s) in members.iter().zip(&share) {
            let s = s / sum;
            augmented[m] += count * s;
            for (r, p) in resp.iter_mut().zip(&posterior[m * g..(m + 1) * g]) {
                *r += s * p;
            }
        }
        row_resp.push(resp);
    }
    EStep { g, log_lik, augmented, posterior, row_resp, log_mix }
}

/// Per component: `Σ_a c_a p_ak` and the weighted rank sums `Σ_a c_a p_ak r_a`.
fn weighted_rank_sums(aug: &Augmented, e: &EStep) -> Vec<(f64, Vec<f64>)> {
    let (g, n) = (e.g, aug.n);
    let partial: Vec<Vec<(f64, Vec<f64>)>> = (0..aug.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![(0.0, vec![0.0; n]); g];
            for a in c * CHUNK..((c + 1) * CHUNK).min(aug.len()) {
                let r = aug.ranking(a);
                for (k, (total, sums)) in acc.iter_mut().enumerate() {
                    let cw = e.augmented[a] * e.posterior[a * g + k];
                    if cw == 0.0 {
                        continue;
                    }
                    *total += cw;
                    for (s, &x) in sums.iter_mut().zip(r) {
                        *s += cw * x as f64;
                    }
                }
            }
            acc
        })
        .collect();
    let mut out = vec![(0.0, vec![0.0; n]); g];
    for chunk in partial {
        for ((total, sums), (t, s)) in out.iter_mut().zip(chunk) {
            *total += t;
            sums.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        }
    }
    out
}

fn m_step_augmented(
    aug: &Augmented,
    e: &EStep,
    prev: &MixtureParams,
    model: &dyn DistanceModel,
    solver: &SolverConfig,
) -> Result<(MixtureParams, Vec<BoundaryFlag>, Vec<f64>)> {
    let g = prev.g();
    let stats = weighted_rank_sums(aug, e);
    let sizes: Vec<f64> = stats.iter().map(|(t, _)| *t).collect();
    let mut components = Vec::with_capacity(g);
    let mut flags = Vec::with_capacity(g);
    for (k, (total, sums)) in stats.into_iter().enumerate() {
        if total <= 0.0 {
            components.push(prev.components[k].clone());
            flags.push(BoundaryFlag::None);
            continue;
        }
        let mean_rank = MeanRankVector { values: sums.into_iter().map(|s| s / total).collect(), weight_total: total };
        let f = fit_mean_rank(mean_rank, model, solver)?;
        components.push(f.params);
        flags.push(f.boundary);
    }
    let total: f64 = sizes.iter().sum();
    let weights = sizes.iter().map(|s| s / total).collect();
    Ok((MixtureParams { weights, components }, flags, sizes))
}

/// Posterior membership for full-ranking rows.
pub fn e_step(data: &WeightedRankings, params: &MixtureParams, model: &dyn DistanceModel) -> Responsibilities {
    let aug = Augmented::from_weighted(data);
    let e = e_step_augmented(&aug, params, model);
    Responsibilities::from_rows(params.g(), e.row_resp)
}

/// Weights, consensus rankings and concentrations from given
/// responsibilities. Fails with [`Error::ZeroWeight`] on an empty component.
pub fn m_step(
    data: &WeightedRankings,
    resp: &Responsibilities,
    model: &dyn DistanceModel,
    solver: &SolverConfig,
) -> Result<MixtureParams> {
    if resp.len() != data.len() {
        return Err(Error::DimensionMismatch { expected: data.len(), found: resp.len() });
    }
    let g = resp.g();
    let total = data.total();
    let mut weights = Vec::with_capacity(g);
    let mut components = Vec::with_capacity(g);
    for k in 0..g {
        let w = resp.column(k);
        let fit = fit_mms_weighted(data, &w, model, solver)?;
        weights.push(fit.mean_rank.weight_total / total);
        components.push(fit.params);
    }
    Ok(MixtureParams { weights, components })
}

/// Augmented completion table and completion-level posteriors for a dataset
/// with partial rows.
pub fn partial_e_step(
    data: &RankingDataset,
    params: &MixtureParams,
    model: &dyn DistanceModel,
    cap: u128,
) -> Result<(CompletionTable, Responsibilities)> {
    let aug = Augmented::build(data, cap)?;
    let e = e_step_augmented(&aug, params, model);
    Ok((
        CompletionTable { rankings: aug.rankings(), counts: e.augmented },
        Responsibilities { g: e.g, values: e.posterior },
    ))
}

/// Multi-start EM on full rankings.
pub fn em_fit(data: &RankingDataset, g: usize, model: &dyn DistanceModel, cfg: &EmConfig) -> Result<MixtureFit> {
    data.to_weighted()?;
    em_fit_partial(data, g, model, cfg)
}

/// Multi-start EM on a dataset that may contain partial rows.
pub fn em_fit_partial(
    data: &RankingDataset,
    g: usize,
    model: &dyn DistanceModel,
    cfg: &EmConfig,
) -> Result<MixtureFit> {
    if g == 0 {
        return Err(Error::InvalidArgument("number of components must be >= 1".into()));
    }
    if cfg.n_starts == 0 {
        return Err(Error::InvalidArgument("n_starts must be >= 1".into()));
    }
    check_model(data.n_items(), model)?;
    let aug = Augmented::build(data, cfg.completion_cap)?;
    let theta0 = initial_theta(model, &cfg.solver)?;
    let starts = if g == 1 { 1 } else { cfg.n_starts };
    let fits: Vec<Result<MixtureFit>> = (0..starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(s as u64);
            let init = random_init(data, g, theta0, &mut rng);
            let mut fit = run_em(&aug, init, model, cfg)?;
            fit.start = s;
            Ok(fit)
        })
        .collect();
    let mut best: Option<MixtureFit> = None;
    for f in fits {
        let f = f?;
        if best.as_ref().is_none_or(|b| f.log_lik > b.log_lik) {
            best = Some(f);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Single EM run from given initial parameters.
pub fn em_from_init(
    data: &RankingDataset,
    init: MixtureParams,
    model: &dyn DistanceModel,
    cfg: &EmConfig,
) -> Result<MixtureFit> {
    check_model(data.n_items(), model)?;
    if init.n() != data.n_items() {
        return Err(Error::DimensionMismatch { expected: data.n_items(), found: init.n() });
    }
    let aug = Augmented::build(data, cfg.completion_cap)?;
    run_em(&aug, init, model, cfg)
}

fn check_model(n: usize, model: &dyn DistanceModel) -> Result<()> {
    if model.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: model.n() });
    }
    Ok(())
}

/// `θ` with `E_θ[D] = 0.75 · d_max / 2`.
fn initial_theta(model: &dyn DistanceModel, solver: &SolverConfig) -> Result<f64> {
    let target = 0.75 * d_max(model.n()) as f64 / 2.0;
    Ok(solve_theta(model, target, solver)?.theta)
}

/// Consensus rankings seeded at distinct observed rows (missing ranks filled
/// at random), uniform permutations when there are too few rows.
fn random_init<R: Rng>(data: &RankingDataset, g: usize, theta: f64, rng: &mut R) -> MixtureParams {
    let n = data.n_items();
    let rows = data.rows();
    let picks = sample(rng, rows.len(), g.min(rows.len())).into_vec();
    let mut components: Vec<MmsParams> =
        picks.into_iter().map(|l| MmsParams { consensus: random_completion(&rows[l].ranking, rng), theta }).collect();
    while components.len() < g {
        components.push(MmsParams { consensus: Ranking::random(n, rng), theta });
    }
    MixtureParams { weights: vec![1.0 / g as f64; g], components }
}

fn random_completion<R: Rng>(p: &PartialRanking, rng: &mut R) -> Ranking {
    use rand::seq::SliceRandom;
    let mut ranks: Vec<u32> = p.ranks().iter().map(|r| r.unwrap_or(0)).collect();
    let mut fill = p.missing_ranks();
    fill.shuffle(rng);
    for (slot, r) in p.unranked_items().into_iter().zip(fill) {
        ranks[slot] = r;
    }
    Ranking::from_vec_unchecked(ranks)
}

fn run_em(aug: &Augmented, init: MixtureParams, model: &dyn DistanceModel, cfg: &EmConfig) -> Result<MixtureFit> {
    let mut params = init;
    let mut reseeds = vec![0usize; params.g()];
    let mut trace = Vec::new();
    let mut disrupted = Vec::new();
    let mut flags = vec![BoundaryFlag::None; params.g()];
    let mut converged = false;
    let mut pending_disruption = false;
    let mut e = e_step_augmented(aug, &params, model);
    trace.push(e.log_lik);
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let (mut next, next_flags, sizes) = m_step_augmented(aug, &e, &params, model, &cfg.solver)?;
        flags = next_flags;
        // Empty components: re-seed at the worst-explained completion, drop
        // after too many re-seeds.
        let mut k = 0;
        while k < next.g() {
            if sizes_at(&sizes, &params, &next, k) >= cfg.empty_fraction * aug.total || next.g() == 1 {
                k += 1;
                continue;
            }
            pending_disruption = true;
            if reseeds[k] >= cfg.max_reseeds {
                warn!("dropping empty mixture component {k} after {} re-seeds", reseeds[k]);
                next.weights.remove(k);
                next.components.remove(k);
                reseeds.remove(k);
                flags.remove(k);
                let total: f64 = next.weights.iter().sum();
                next.weights.iter_mut().for_each(|w| *w /= total);
                continue;
            }
            reseeds[k] += 1;
            let worst =
                (0..e.log_mix.len()).min_by(|&a, &b| e.log_mix[a].total_cmp(&e.log_mix[b])).expect("nonempty table");
            next.components[k] = MmsParams {
                consensus: Ranking::from_vec_unchecked(aug.ranking(worst).to_vec()),
                theta: initial_theta(model, &cfg.solver)?,
            };
            let g = next.g() as f64;
            next.weights[k] = 1.0 / g;
            let total: f64 = next.weights.iter().sum();
            next.weights.iter_mut().for_each(|w| *w /= total);
            k += 1;
        }
        params = next;
        let prev = e.log_lik;
        e = e_step_augmented(aug, &params, model);
        trace.push(e.log_lik);
        if pending_disruption {
            disrupted.push(trace.len() - 1);
            pending_disruption = false;
            continue;
        }
        if (e.log_lik - prev).abs() < cfg.tol {
            converged = true;
            break;
        }
    }
    let g = params.g();
    let resp = Responsibilities::from_rows(g, e.row_resp);
    let cluster_sizes: Vec<f64> =
        (0..g).map(|k| aug.rows.iter().zip(resp.rows()).map(|((c, _), r)| c * r[k]).sum()).collect();
    let log_lik = e.log_lik;
    let n_total = aug.total;
    Ok(MixtureFit {
        bic: bic(log_lik, g, aug.n, n_total, BicConvention::Full),
        bic_continuous: bic(log_lik, g, aug.n, n_total, BicConvention::Continuous),
        params,
        responsibilities: resp,
        log_lik,
        iterations,
        converged,
        cluster_sizes,
        trace,
        disrupted,
        boundary: flags,
        start: 0,
        sample_size: n_total,
    })
}

/// Size of component `k` of the freshly updated parameters; the M-step sizes
/// stay aligned with `next` because drops only happen afterwards.
fn sizes_at(sizes: &[f64], prev: &MixtureParams, next: &MixtureParams, k: usize) -> f64 {
    let offset = prev.g() - next.g();
    sizes.get(k + offset).copied().unwrap_or(0.0)
}
