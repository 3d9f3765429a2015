//! Recovery metrics and label matching.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{d_max, next_permutation, spearman_distance, Ranking};

/// Largest side for which label matching enumerates every assignment.
pub const MAX_BRUTE_FORCE_G: usize = 8;

/// `|θ̂ - θ| / θ`.
pub fn metric_m_theta(theta_hat: f64, theta: f64) -> Result<f64> {
    if theta.is_nan() || theta <= 0.0 {
        return Err(Error::InvalidArgument(format!("true theta must be positive, got {theta}")));
    }
    Ok((theta_hat - theta).abs() / theta)
}

/// `d(ρ̂, ρ) / d_max`.
pub fn metric_m_rho(rho_hat: &Ranking, rho: &Ranking) -> Result<f64> {
    Ok(spearman_distance(rho_hat, rho)? as f64 / d_max(rho.n()) as f64)
}

pub fn metric_phi_rho(rho_hat: &Ranking, rho: &Ranking) -> Result<f64> {
    if rho_hat.n() != rho.n() {
        return Err(Error::DimensionMismatch { expected: rho.n(), found: rho_hat.n() });
    }
    Ok(if rho_hat == rho { 1.0 } else { 0.0 })
}

/// Matches fitted components to true ones by minimum total Spearman distance
/// between consensus rankings. Entry `j` is the true label of fitted
/// component `j`, or `None` when there are more fitted than true components.
///
/// Every injective assignment is tried when both sides have at most
/// [`MAX_BRUTE_FORCE_G`] components; larger problems are matched greedily.
pub fn match_labels(truth: &[Ranking], fitted: &[Ranking]) -> Result<Vec<Option<usize>>> {
    let cost = fitted
        .iter()
        .map(|f| truth.iter().map(|t| spearman_distance(f, t)).collect::<Result<Vec<u64>>>())
        .collect::<Result<Vec<_>>>()?;
    let (gt, gf) = (truth.len(), fitted.len());
    if gt.max(gf) > MAX_BRUTE_FORCE_G {
        return Ok(greedy(&cost, gt, gf));
    }
    let side = gt.max(gf);
    let mut perm: Vec<usize> = (0..side).collect();
    let mut best: Option<(u64, Vec<usize>)> = None;
    loop {
        // perm[j] is the true label of fitted j; labels >= gt are unmatched.
        let total: u64 = (0..gf).filter(|&j| perm[j] < gt).map(|j| cost[j][perm[j]]).sum();
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, perm.clone()));
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let perm = best.map(|(_, p)| p).unwrap_or_default();
    Ok((0..gf).map(|j| (perm[j] < gt).then_some(perm[j])).collect())
}

fn greedy(cost: &[Vec<u64>], gt: usize, gf: usize) -> Vec<Option<usize>> {
    let mut pairs: Vec<(u64, usize, usize)> = (0..gf).flat_map(|j| (0..gt).map(move |k| (cost[j][k], j, k))).collect();
    pairs.sort_unstable();
    let mut out = vec![None; gf];
    let mut used = vec![false; gt];
    for (_, j, k) in pairs {
        if out[j].is_none() && !used[k] {
            out[j] = Some(k);
            used[k] = true;
        }
    }
    out
}

/// Fraction of units whose fitted label, mapped through `mapping`, differs
/// from the true label.
pub fn metric_phi_z(assigned: &[usize], truth: &[usize], mapping: &[Option<usize>]) -> Result<f64> {
    if assigned.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), found: assigned.len() });
    }
    if assigned.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let wrong = assigned.iter().zip(truth).filter(|&(&a, &t)| mapping.get(a).copied().flatten() != Some(t)).count();
    Ok(wrong as f64 / truth.len() as f64)
}

/// The five recovery measures.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Metrics {
    pub m_theta: f64,
    pub m_rho: f64,
    pub phi_rho: f64,
    pub phi_g: f64,
    pub phi_z: f64,
}

impl Metrics {
    /// Componentwise mean, accumulated in slice order.
    pub fn mean(all: &[Metrics]) -> Metrics {
        let k = all.len().max(1) as f64;
        let mut acc = Metrics::default();
        for m in all {
            acc.m_theta += m.m_theta;
            acc.m_rho += m.m_rho;
            acc.phi_rho += m.phi_rho;
            acc.phi_g += m.phi_g;
            acc.phi_z += m.phi_z;
        }
        Metrics {
            m_theta: acc.m_theta / k,
            m_rho: acc.m_rho / k,
            phi_rho: acc.phi_rho / k,
            phi_g: acc.phi_g / k,
            phi_z: acc.phi_z / k,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: &[u32]) -> Ranking {
        Ranking::new(v.to_vec()).unwrap()
    }

    #[test]
    fn theta_error() {
        assert!((metric_m_theta(0.11, 0.10).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(metric_m_theta(0.3, 0.3).unwrap(), 0.0);
        assert!(metric_m_theta(0.1, 0.0).is_err());
    }

    #[test]
    fn rho_metrics() {
        let id = Ranking::identity(10);
        assert_eq!(metric_m_rho(&id, &id).unwrap(), 0.0);
        assert_eq!(metric_phi_rho(&id, &id).unwrap(), 1.0);
        assert_eq!(metric_m_rho(&Ranking::reversed(10), &id).unwrap(), 1.0);
        assert_eq!(metric_phi_rho(&Ranking::reversed(10), &id).unwrap(), 0.0);
        let swap = r(&[2, 1, 3, 4, 5, 6, 7, 8, 9, 10]);
        assert!((metric_m_rho(&swap, &id).unwrap() - 2.0 / 330.0).abs() < 1e-15);
    }

    #[test]
    fn phi_z_cases() {
        let truth = vec![0; 50].into_iter().chain(vec![1; 50]).collect::<Vec<_>>();
        let id = [Some(0), Some(1)];
        assert_eq!(metric_phi_z(&truth, &truth, &id).unwrap(), 0.0);
        let swapped: Vec<usize> = truth.iter().map(|&t| 1 - t).collect();
        assert_eq!(metric_phi_z(&swapped, &truth, &[Some(1), Some(0)]).unwrap(), 0.0);
        let mut one_off = truth.clone();
        one_off[0] = 1;
        assert!((metric_phi_z(&one_off, &truth, &id).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(metric_phi_z(&truth, &truth, &[Some(0), None]).unwrap(), 0.5);
    }

    #[test]
    fn matching_recovers_permutation() {
        let truth = [Ranking::identity(6), Ranking::reversed(6), r(&[3, 4, 1, 2, 6, 5])];
        let fitted = [truth[2].clone(), r(&[2, 1, 3, 4, 5, 6]), truth[1].clone()];
        assert_eq!(match_labels(&truth, &fitted).unwrap(), vec![Some(2), Some(0), Some(1)]);
        assert_eq!(match_labels(&truth, &fitted[..2]).unwrap(), vec![Some(2), Some(0)]);
        assert_eq!(match_labels(&truth[..2], &fitted).unwrap(), vec![None, Some(0), Some(1)]);
    }

    #[test]
    fn greedy_agrees_on_clear_cases() {
        let truth: Vec<Ranking> = (0..9)
            .map(|k| {
                let mut v: Vec<u32> = (1..=9).collect();
                v.rotate_left(k);
                Ranking::new(v).unwrap()
            })
            .collect();
        let mut fitted = truth.clone();
        fitted.reverse();
        let m = match_labels(&truth, &fitted).unwrap();
        assert_eq!(m, (0..9).rev().map(Some).collect::<Vec<_>>());
    }
}
