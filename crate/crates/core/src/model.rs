//! The homogeneous Mallows model with Spearman distance:
//!
//! ```text
//! P(r | ρ, θ) = exp(-2θ(c_n - ρᵀr)) / Z(θ)
//! ```
//!
//! The MLE of `ρ` is the Borda ranking of the sample mean ranks and `θ̂`
//! solves `E_θ[D] = 2(c_n - ρ̂ᵀr̄)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{solve_theta, BoundaryFlag, DistanceModel, SolverConfig};
use crate::ranking::{
    borda_rank, c_n, dot_unchecked, weighted_mean_rank, MeanRankVector, Ranking, RankingDataset, TiePolicy,
    WeightedRankings,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmsParams {
    pub consensus: Ranking,
    pub theta: f64,
}

impl MmsParams {
    pub fn new(consensus: Ranking, theta: f64) -> Result<Self> {
        if !theta.is_finite() || theta < 0.0 {
            return Err(Error::InvalidArgument(format!("theta must be finite and >= 0, got {theta}")));
        }
        Ok(MmsParams { consensus, theta })
    }

    pub fn n(&self) -> usize {
        self.consensus.n()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmsFit {
    pub params: MmsParams,
    pub log_lik: f64,
    pub mean_rank: MeanRankVector,
    /// Mean distance to the fitted consensus, `2(c_n - ρ̂ᵀr̄)`.
    pub dbar: f64,
    pub boundary: BoundaryFlag,
}

/// `-2θ(c_n - ρᵀr) - log Z(θ)`.
pub fn mms_log_pmf(params: &MmsParams, r: &Ranking, model: &dyn DistanceModel) -> Result<f64> {
    if r.n() != params.n() || model.n() != params.n() {
        return Err(Error::DimensionMismatch { expected: params.n(), found: r.n() });
    }
    Ok(log_kernel(params, r) - model.log_partition(params.theta))
}

/// Unnormalized log-density `-θ d(r, ρ)`.
pub(crate) fn log_kernel(params: &MmsParams, r: &Ranking) -> f64 {
    log_kernel_ranks(params.theta, params.consensus.ranks(), r.ranks())
}

/// [`log_kernel`] on raw rank slices of equal length.
pub(crate) fn log_kernel_ranks(theta: f64, rho: &[u32], r: &[u32]) -> f64 {
    let d = 2 * (c_n(rho.len()) - dot_unchecked(rho, r));
    -theta * d as f64
}

/// `-W [log Z(θ) + θ d̄]` with `W = Σ N_l` and `d̄` the mean distance to `ρ`.
pub fn mms_log_likelihood(params: &MmsParams, data: &WeightedRankings, model: &dyn DistanceModel) -> Result<f64> {
    if data.n() != params.n() {
        return Err(Error::DimensionMismatch { expected: params.n(), found: data.n() });
    }
    let log_z = model.log_partition(params.theta);
    Ok(data.rankings().iter().zip(data.counts()).map(|(r, &c)| c * (log_kernel(params, r) - log_z)).sum())
}

/// Closed-form MLE on a dataset of full rankings.
pub fn fit_mms(data: &RankingDataset, model: &dyn DistanceModel, solver: &SolverConfig) -> Result<MmsFit> {
    let weighted = data.to_weighted()?;
    let ones = vec![1.0; weighted.len()];
    fit_mms_weighted(&weighted, &ones, model, solver)
}

/// MLE with per-row weights `w_l` on top of the multiplicities, the M-step
/// of one mixture component.
pub fn fit_mms_weighted(
    data: &WeightedRankings,
    weights: &[f64],
    model: &dyn DistanceModel,
    solver: &SolverConfig,
) -> Result<MmsFit> {
    let n = data.n();
    if model.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: model.n() });
    }
    fit_mean_rank(weighted_mean_rank(data, weights)?, model, solver)
}

/// MLE from the sufficient statistic: the weighted mean rank vector and its
/// total weight.
pub fn fit_mean_rank(mean_rank: MeanRankVector, model: &dyn DistanceModel, solver: &SolverConfig) -> Result<MmsFit> {
    let n = mean_rank.n();
    if model.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: model.n() });
    }
    let consensus = borda_rank(&mean_rank, TiePolicy::SmallestIndex)?;
    let dot = mean_rank.scalar_product(&consensus)?;
    let dbar = (2.0 * (c_n(n) as f64 - dot)).max(0.0);
    let sol = solve_theta(model, dbar, solver)?;
    let total = mean_rank.weight_total;
    let log_lik = -total * (model.log_partition(sol.theta) + sol.theta * dbar);
    Ok(MmsFit { params: MmsParams { consensus, theta: sol.theta }, log_lik, mean_rank, dbar, boundary: sol.flag })
}
