//! Partition function, distance moments and the concentration solver.
//!
//! `Z(θ) = Σ_d N_d e^{-θd}` is evaluated from a distance-count table in the
//! log domain. The moments of `D` follow from the same weights, and `θ̂`
//! solves `E_θ[D] = d̄`, which has a unique root because `E_θ[D]` is strictly
//! decreasing (its derivative is `-Var_θ[D]`).

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::ln_gamma;

use crate::bessel::{bessel_ratio, log_bessel_i};
use crate::counts::DistanceDistribution;
use crate::error::{Error, Result};
use crate::ranking::d_max;

/// `log Σ exp(v)`, `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// A model of the Spearman distance from the consensus, `P(D = d) ∝ N_d e^{-θd}`.
pub trait DistanceModel: Send + Sync {
    fn n(&self) -> usize;

    fn log_partition(&self, theta: f64) -> f64;

    /// `(E_θ[D], Var_θ[D])`.
    fn moments(&self, theta: f64) -> (f64, f64);

    fn expected_distance(&self, theta: f64) -> f64 {
        self.moments(theta).0
    }
}

/// Table-backed evaluator, exact or approximate depending on the table.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionEvaluator {
    dist: DistanceDistribution,
}

impl PartitionEvaluator {
    pub fn new(dist: DistanceDistribution) -> Self {
        PartitionEvaluator { dist }
    }

    pub fn distribution(&self) -> &DistanceDistribution {
        &self.dist
    }

    fn log_weights(&self, theta: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.dist.log_counts().iter().enumerate().filter(|(_, lc)| lc.is_finite()).map(move |(h, &lc)| {
            let d = 2.0 * h as f64;
            (d, lc - theta * d)
        })
    }
}

impl DistanceModel for PartitionEvaluator {
    fn n(&self) -> usize {
        self.dist.n()
    }

    fn log_partition(&self, theta: f64) -> f64 {
        log_sum_exp(self.log_weights(theta).map(|(_, w)| w))
    }

    fn moments(&self, theta: f64) -> (f64, f64) {
        let m = self.log_weights(theta).map(|(_, w)| w).fold(f64::NEG_INFINITY, f64::max);
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        for (d, w) in self.log_weights(theta) {
            let p = (w - m).exp();
            s0 += p;
            s1 += p * d;
        }
        let mean = s1 / s0;
        let mut s2 = 0.0;
        for (d, w) in self.log_weights(theta) {
            s2 += (w - m).exp() * (d - mean) * (d - mean);
        }
        (mean, s2 / s0)
    }
}

/// Analytical von Mises-Fisher approximation of `Z(θ)`, with
/// `κ = θ n (n² - 1) / 6` and `ν = (n - 3) / 2`:
///
/// ```text
/// Ẑ(θ) = 2^ν n! I_ν(κ) Γ((n-1)/2) / (κ^ν e^κ)
/// ```
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VmfModel {
    n: usize,
}

impl VmfModel {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidArgument(format!("vMF approximation needs n >= 4, got {n}")));
        }
        Ok(VmfModel { n })
    }

    fn nu(&self) -> f64 {
        (self.n as f64 - 3.0) / 2.0
    }

    /// `n (n² - 1) / 6`, so that `κ = θ k` and `E_0[D] = k`.
    fn k(&self) -> f64 {
        let n = self.n as f64;
        n * (n * n - 1.0) / 6.0
    }

    pub fn kappa(&self, theta: f64) -> f64 {
        theta * self.k()
    }
}

impl DistanceModel for VmfModel {
    fn n(&self) -> usize {
        self.n
    }

    fn log_partition(&self, theta: f64) -> f64 {
        vmf_log_partition(self.n, theta)
    }

    /// `E = k (1 - R)` and `Var = k² (1 - R² - (2ν+1) R / κ)` with
    /// `R = I_{ν+1}(κ) / I_ν(κ)`.
    fn moments(&self, theta: f64) -> (f64, f64) {
        let k = self.k();
        let nu = self.nu();
        let kappa = self.kappa(theta);
        if kappa < 1e-8 {
            return (k, k * k / (2.0 * nu + 2.0));
        }
        let (r, u) = bessel_ratio(nu, kappa);
        let slope = u * (2.0 - u) - (2.0 * nu + 1.0) * r / kappa;
        (k * u, k * k * slope.max(0.0))
    }
}

/// `log Ẑ_vMF(θ)`, computed entirely in the log domain; equals `log n!` at 0.
pub fn vmf_log_partition(n: usize, theta: f64) -> f64 {
    let nf = n as f64;
    let nu = (nf - 3.0) / 2.0;
    let kappa = theta * nf * (nf * nf - 1.0) / 6.0;
    let ln_fact = ln_factorial(n as u64);
    if kappa <= 0.0 {
        return ln_fact;
    }
    nu * std::f64::consts::LN_2 + ln_fact + log_bessel_i(nu, kappa) + ln_gamma((nf - 1.0) / 2.0)
        - nu * kappa.ln()
        - kappa
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryFlag {
    #[default]
    None,
    /// `d̄ >= E_0[D]`: the data are no more concentrated than uniform.
    ThetaZero,
    /// `d̄ <= E_{θmax}[D]`, including `d̄ = 0`.
    ThetaMax,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stop when `|E_θ[D] - d̄| <= tol · d_max`.
    pub tol: f64,
    pub theta_max: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-10, theta_max: 10.0, max_iter: 200 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaSolution {
    pub theta: f64,
    pub flag: BoundaryFlag,
}

/// Solves `E_θ[D] = d̄` by safeguarded Newton on `log E_θ[D]` inside a
/// shrinking bracket, with bisection whenever Newton leaves the bracket.
pub fn solve_theta(model: &dyn DistanceModel, dbar: f64, cfg: &SolverConfig) -> Result<ThetaSolution> {
    if !dbar.is_finite() || dbar < 0.0 {
        return Err(Error::InvalidArgument(format!("mean distance must be finite and >= 0, got {dbar}")));
    }
    let abs_tol = cfg.tol * d_max(model.n()) as f64;
    let e0 = model.expected_distance(0.0);
    if dbar >= e0 - abs_tol {
        return Ok(ThetaSolution { theta: 0.0, flag: BoundaryFlag::ThetaZero });
    }
    let e_max = model.expected_distance(cfg.theta_max);
    if dbar <= e_max {
        return Ok(ThetaSolution { theta: cfg.theta_max, flag: BoundaryFlag::ThetaMax });
    }
    let target = dbar.ln();
    let (mut lo, mut hi) = (0.0f64, cfg.theta_max);
    // Start from the small-θ linearization E ≈ E_0 - θ Var_0.
    let var0 = model.moments(0.0).1;
    let mut theta = ((e0 - dbar) / var0).clamp(0.0, cfg.theta_max);
    if !(theta > lo && theta < hi) {
        theta = 0.5 * (lo + hi);
    }
    for _ in 0..cfg.max_iter {
        let (mean, var) = model.moments(theta);
        if (mean - dbar).abs() <= abs_tol {
            return Ok(ThetaSolution { theta, flag: BoundaryFlag::None });
        }
        if mean > dbar {
            lo = theta;
        } else {
            hi = theta;
        }
        // d log E / dθ = -Var / E
        let step = (mean.ln() - target) * mean / var;
        let newton = theta + step;
        theta = if var > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(ThetaSolution { theta, flag: BoundaryFlag::None })
}
