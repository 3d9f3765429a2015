//! Large-deviation approximation of the distance distribution.
//!
//! With `x = d / d_max`, the scaled log-frequency `(1/n) log(N_d / n!)` is
//! modelled by the rate function
//!
//! ```text
//! ξ(x) = a0 + a1 log[x(1-x)] + a2 x(1-x)
//! ```
//!
//! where `a_i = α_i + β_i`. The leading terms are fixed, `α0 = 0`,
//! `α1 = 1/3` and `α2 = 8 log(2) α1`; the corrections are `β_i = b_i / √n`
//! with `b` fitted by `n²`-weighted least squares to exact tables.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use super::{boundary_counts, table_len, DistanceDistribution, Provenance};
use crate::error::{Error, Result};

pub const ALPHA1: f64 = 1.0 / 3.0;

pub fn alpha2() -> f64 {
    8.0 * std::f64::consts::LN_2 * ALPHA1
}

/// Coefficients of `ξ` for one `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCoefficients {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub split: Option<RateSplit>,
}

/// Leading (`alpha`) and sub-leading (`beta`) parts of each `a_i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSplit {
    pub alpha: [f64; 3],
    pub beta: [f64; 3],
}

/// The `n`-dependent family `β_i(n) = b_i / √n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
}

impl RateModel {
    /// `a0 ≈ -0.24/√n`, `a1 ≈ 1/3 - 0.1784/√n`, `a2 ≈ (8/3) log 2 - 5.5241/√n`.
    pub const PUBLISHED: RateModel = RateModel { b0: -0.24, b1: -0.1784, b2: -5.5241 };

    pub fn coefficients(&self, n: usize) -> RateCoefficients {
        let s = (n as f64).sqrt();
        let alpha = [0.0, ALPHA1, alpha2()];
        let beta = [self.b0 / s, self.b1 / s, self.b2 / s];
        RateCoefficients {
            a0: alpha[0] + beta[0],
            a1: alpha[1] + beta[1],
            a2: alpha[2] + beta[2],
            split: Some(RateSplit { alpha, beta }),
        }
    }
}

impl Default for RateModel {
    fn default() -> Self {
        RateModel::PUBLISHED
    }
}

/// `ξ(x) = a0 + a1 log[x(1-x)] + a2 x(1-x)` on the open unit interval.
pub fn rate_function(x: f64, c: &RateCoefficients) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidArgument(format!("rate function argument {x} not in (0, 1)")));
    }
    Ok(xi(x, c))
}

fn xi(x: f64, c: &RateCoefficients) -> f64 {
    let q = x * (1.0 - x);
    c.a0 + c.a1 * q.ln() + c.a2 * q
}

/// Normalizing constant applied to the interior of an approximate table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `N̂_d = n! exp(n ξ(x))` as is.
    #[default]
    Unit,
    /// Interior rescaled so that the whole table sums to `n!`.
    Renormalized,
}

fn is_boundary(h: usize, last: usize) -> Option<usize> {
    if h <= 3 {
        Some(h)
    } else if last - h <= 3 {
        Some(last - h)
    } else {
        None
    }
}

/// Approximate table: `log n! + n ξ(d/d_max)` in the interior, the exact
/// closed-form counts at `d ∈ {0, 2, 4, 6}` and their mirror images.
pub fn approx_counts(
    n: usize,
    coeffs: &RateCoefficients,
    normalization: Normalization,
) -> Result<DistanceDistribution> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!("approximate counts need n >= 4, got {n}")));
    }
    let len = table_len(n);
    let last = len - 1;
    let ln_fact = ln_factorial(n as u64);
    let boundary = boundary_counts(n);
    let nf = n as f64;
    let mut log_counts = Vec::with_capacity(len);
    for h in 0..len {
        let v = match is_boundary(h, last) {
            Some(k) if boundary[k] == 0 => f64::NEG_INFINITY,
            Some(k) => (boundary[k] as f64).ln(),
            None => ln_fact + nf * xi(h as f64 / last as f64, coeffs),
        };
        log_counts.push(v);
    }
    if normalization == Normalization::Renormalized {
        let boundary_total: f64 = (0..len).filter_map(|h| is_boundary(h, last).map(|k| boundary[k] as f64)).sum();
        let interior =
            crate::partition::log_sum_exp((0..len).filter(|&h| is_boundary(h, last).is_none()).map(|h| log_counts[h]));
        let target = (ln_fact.exp() - boundary_total).ln();
        if !target.is_finite() {
            return Err(Error::InvalidArgument(format!("boundary counts exhaust n! for n = {n}; cannot renormalize")));
        }
        let shift = target - interior;
        for (h, v) in log_counts.iter_mut().enumerate() {
            if is_boundary(h, last).is_none() {
                *v += shift;
            }
        }
    }
    DistanceDistribution::from_log_counts(n, log_counts, Provenance::Approximate)
}

/// Interior points `(x, (1/n) log(N_d/n!))` with nonzero count.
fn scaled_points(dist: &DistanceDistribution) -> impl Iterator<Item = (f64, f64)> + '_ {
    let n = dist.n() as f64;
    let last = dist.len() - 1;
    let ln_fact = ln_factorial(dist.n() as u64);
    dist.log_counts()
        .iter()
        .enumerate()
        .filter(move |&(h, v)| h > 0 && h < last && v.is_finite())
        .map(move |(h, &v)| (h as f64 / last as f64, (v - ln_fact) / n))
}

/// Root-mean-square deviation of `ξ` from the scaled log-frequencies of a
/// table, normalized by `C(n+1, 3)`.
pub fn rate_rmse(dist: &DistanceDistribution, coeffs: &RateCoefficients) -> f64 {
    let sq: f64 = scaled_points(dist).map(|(x, y)| (xi(x, coeffs) - y).powi(2)).sum();
    (sq / (dist.len() - 1) as f64).sqrt()
}

/// Weighted least-squares fit of `(b0, b1, b2)`: minimizes
/// `Σ_n n² Σ_d [ξ_n(x_d) - (1/n) log(N_d/n!)]²` over the given tables with
/// the leading `α` terms held fixed.
pub fn fit_rate_coefficients(tables: &[DistanceDistribution]) -> Result<RateModel> {
    if tables.is_empty() {
        return Err(Error::InvalidArgument("no count tables supplied to the rate fit".into()));
    }
    let a2 = alpha2();
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    let mut points = 0usize;
    for dist in tables {
        if dist.n() < 4 {
            return Err(Error::InvalidArgument(format!("rate fit needs tables with n >= 4, got n = {}", dist.n())));
        }
        let nf = dist.n() as f64;
        let weight = nf * nf;
        let s = nf.sqrt();
        for (x, y) in scaled_points(dist) {
            let q = x * (1.0 - x);
            let l = q.ln();
            let row = Vector3::new(1.0 / s, l / s, q / s);
            let target = y - ALPHA1 * l - a2 * q;
            normal += weight * row * row.transpose();
            rhs += weight * target * row;
            points += 1;
        }
    }
    if points < 3 {
        return Err(Error::InvalidArgument("too few interior points for the rate fit".into()));
    }
    let b = normal
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidArgument("rate fit normal equations are singular".into()))?;
    Ok(RateModel { b0: b[0], b1: b[1], b2: b[2] })
}
