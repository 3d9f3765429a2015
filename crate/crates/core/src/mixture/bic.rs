//! BIC and the elbow rule for choosing the number of components.

use serde::{Deserialize, Serialize};

use super::{em_fit_partial, EmConfig, MixtureFit};
use crate::error::{Error, Result};
use crate::partition::DistanceModel;
use crate::ranking::RankingDataset;

/// How free parameters are counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BicConvention {
    /// `(2G - 1) + G (n - 1)`: weights, concentrations and each consensus
    /// counted as `n - 1` free quantities.
    #[default]
    Full,
    /// `2G - 1`: weights and concentrations only.
    Continuous,
}

pub fn parameter_count(g: usize, n: usize, convention: BicConvention) -> usize {
    match convention {
        BicConvention::Full => (2 * g - 1) + g * (n - 1),
        BicConvention::Continuous => 2 * g - 1,
    }
}

/// `-2 ℓ + k log N`.
pub fn bic(log_lik: f64, g: usize, n: usize, sample_size: f64, convention: BicConvention) -> f64 {
    -2.0 * log_lik + parameter_count(g, n, convention) as f64 * sample_size.ln()
}

/// Position of the elbow of a BIC curve over consecutive `G` values.
///
/// Interior points are scored by the discrete curvature
/// `BIC_{G-1} - 2 BIC_G + BIC_{G+1}` and the largest wins (ties to the
/// smaller `G`). Curves shorter than three points fall back to the minimum,
/// and so does a curve whose minimum sits at its first point, since the
/// curvature rule can never pick an endpoint.
pub fn elbow_index(bics: &[f64]) -> usize {
    let argmin = bics.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(i, _)| i);
    if bics.len() < 3 || argmin == 0 {
        return argmin;
    }
    let mut best = 1;
    let mut best_curv = f64::NEG_INFINITY;
    for i in 1..bics.len() - 1 {
        let curv = bics[i - 1] - 2.0 * bics[i] + bics[i + 1];
        if curv > best_curv {
            best_curv = curv;
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub g_hat: usize,
    pub g_values: Vec<usize>,
    pub bic_curve: Vec<f64>,
    pub convention: BicConvention,
    pub fits: Vec<MixtureFit>,
}

impl Selection {
    pub fn selected(&self) -> &MixtureFit {
        let i = self.g_values.iter().position(|&g| g == self.g_hat).expect("selected G is in range");
        &self.fits[i]
    }

    pub fn fit_for(&self, g: usize) -> Option<&MixtureFit> {
        self.g_values.iter().position(|&x| x == g).map(|i| &self.fits[i])
    }
}

/// Fits every `G` in `g_range` (increasing, consecutive) and applies the
/// elbow rule to the BIC curve.
pub fn select_g(
    data: &RankingDataset,
    g_range: &[usize],
    model: &dyn DistanceModel,
    cfg: &EmConfig,
    convention: BicConvention,
) -> Result<Selection> {
    if g_range.is_empty() || g_range[0] == 0 || g_range.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::InvalidArgument(
            "G range must be a nonempty run of consecutive values starting at 1 or more".into(),
        ));
    }
    let n = data.n_items();
    let mut fits = Vec::with_capacity(g_range.len());
    let mut curve = Vec::with_capacity(g_range.len());
    for &g in g_range {
        let fit = em_fit_partial(data, g, model, cfg)?;
        // Components dropped during EM lower the parameter count.
        curve.push(bic(fit.log_lik, fit.params.g(), n, fit.sample_size, convention));
        fits.push(fit);
    }
    let g_hat = g_range[elbow_index(&curve)];
    Ok(Selection { g_hat, g_values: g_range.to_vec(), bic_curve: curve, convention, fits })
}
