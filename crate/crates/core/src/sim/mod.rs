//! Simulation studies: homogeneous and mixture recovery, censored data, and
//! the accuracy of `θ` under different partition functions.
//!
//! Every replicate draws its randomness from the root seed with the
//! replicate index as the generator stream, so results do not depend on how
//! replicates are scheduled across threads.

mod metrics;
mod scenario;

use std::path::Path;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counts::{CountsConfig, Provenance};
use crate::error::{Error, Result};
use crate::mixture::{select_g, BicConvention, EmConfig, MixtureFit};
use crate::model::{fit_mms, MmsParams};
use crate::partition::{DistanceModel, PartitionEvaluator, SolverConfig, VmfModel};
use crate::ranking::Ranking;
use crate::sampler::{default_method, sample_mms, SamplerMethod};

pub use metrics::{
    match_labels, metric_m_rho, metric_m_theta, metric_phi_rho, metric_phi_z, Metrics, MAX_BRUTE_FORCE_G,
};
pub use scenario::{
    censor, dirichlet, draw_mixture_scenario, separated_consensus, Censoring, MixtureDraw, Scenario, CENSOR_DEPTHS,
    PATTERN_A, PATTERN_B, REJECTION_BUDGET,
};

/// A study read from a TOML file; the `study` key selects the kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study", rename_all = "snake_case")]
pub enum StudySpec {
    Recovery(ScenarioSpec),
    ThetaEstimation(ThetaStudySpec),
}

impl StudySpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: StudySpec = toml::from_str(text)?;
        match &spec {
            StudySpec::Recovery(s) => s.validate()?,
            StudySpec::ThetaEstimation(s) => s.validate()?,
        }
        Ok(spec)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn run(&self) -> Result<StudyReport> {
        Ok(match self {
            StudySpec::Recovery(s) => StudyReport::Recovery(run_study(s)?),
            StudySpec::ThetaEstimation(s) => StudyReport::ThetaEstimation(run_theta_study(s)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study", rename_all = "snake_case")]
pub enum StudyReport {
    Recovery(MetricsReport),
    ThetaEstimation(ThetaStudyReport),
}

fn default_replicates() -> usize {
    20
}

fn default_starts() -> usize {
    EmConfig::default().n_starts
}

/// Replicated recovery study for a (possibly censored) mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub n: usize,
    pub sample_size: usize,
    #[serde(default = "one")]
    pub true_g: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    /// Minimum pairwise Spearman distance between true consensus rankings;
    /// defaults to `(n² - 1) / 3`.
    #[serde(default)]
    pub min_separation: Option<u64>,
    #[serde(default)]
    pub censoring: Censoring,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    /// Values of `G` fitted; defaults to `true_g` alone.
    #[serde(default)]
    pub g_range: Option<Vec<usize>>,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub bic_convention: BicConvention,
    #[serde(default)]
    pub counts: CountsConfig,
    /// MCMC or exhaustive; defaults by `n`.
    #[serde(default)]
    pub sampler: Option<SamplerMethod>,
}

fn one() -> usize {
    1
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.sample_size == 0 || self.true_g == 0 || self.replicates == 0 || self.starts == 0 {
            return Err(Error::InvalidArgument(
                "n >= 2, sample_size, true_g, replicates and starts >= 1 required".into(),
            ));
        }
        if !(self.theta_min >= 0.0 && self.theta_min < self.theta_max) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= theta_min < theta_max, got [{}, {}]",
                self.theta_min, self.theta_max
            )));
        }
        let g = self.g_values();
        if g.is_empty() || g[0] == 0 || g.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::InvalidArgument("g_range must be consecutive values >= 1".into()));
        }
        Ok(())
    }

    pub fn g_values(&self) -> Vec<usize> {
        self.g_range.clone().unwrap_or_else(|| vec![self.true_g])
    }

    pub fn separation(&self) -> u64 {
        self.min_separation.unwrap_or(((self.n * self.n - 1) / 3) as u64)
    }

    pub fn sampler_method(&self) -> SamplerMethod {
        self.sampler.unwrap_or_else(|| default_method(self.n))
    }
}

/// Generator for replicate `rep` under `root`.
pub fn replicate_rng(root: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(rep as u64);
    rng
}

/// EM health of every fit in one replicate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EmDiagnostics {
    /// Largest log-likelihood decrease between undisrupted iterations.
    pub max_decrease: f64,
    /// Largest `|Σ_g ω_g - 1|`.
    pub weight_error: f64,
    /// Largest `|Σ_g ẑ_lg - 1|` over rows.
    pub responsibility_error: f64,
    pub all_converged: bool,
    pub dropped_components: usize,
}

impl EmDiagnostics {
    pub fn of(fits: &[MixtureFit], requested: &[usize]) -> Self {
        let mut d = EmDiagnostics {
            max_decrease: 0.0,
            weight_error: 0.0,
            responsibility_error: 0.0,
            all_converged: true,
            dropped_components: 0,
        };
        for (fit, &g) in fits.iter().zip(requested) {
            d.max_decrease = d.max_decrease.max(fit.max_decrease());
            d.weight_error = d.weight_error.max((fit.params.weights.iter().sum::<f64>() - 1.0).abs());
            for row in fit.responsibilities.rows() {
                d.responsibility_error = d.responsibility_error.max((row.iter().sum::<f64>() - 1.0).abs());
            }
            d.all_converged &= fit.converged;
            d.dropped_components += g - fit.params.g();
        }
        d
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplicateResult {
    pub replicate: usize,
    pub truth: crate::mixture::MixtureParams,
    pub g_hat: usize,
    pub bic_curve: Vec<f64>,
    /// Parameters of the fit with `G = true_g` (or the selected one when
    /// `true_g` lies outside the range), on which metrics are computed.
    pub evaluated: crate::mixture::MixtureParams,
    pub log_lik: f64,
    pub iterations: usize,
    pub metrics: Metrics,
    pub diagnostics: EmDiagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsReport {
    pub spec: ScenarioSpec,
    pub counts_provenance: Provenance,
    pub replicates: Vec<ReplicateResult>,
    pub mean: Metrics,
}

fn model_for(n: usize, counts: &CountsConfig) -> Result<(PartitionEvaluator, Provenance)> {
    let dist = counts.build(n)?;
    let provenance = dist.provenance();
    Ok((PartitionEvaluator::new(dist), provenance))
}

/// Draw, censor, fit over the `G` range, select `Ĝ`, score; replicates run
/// in parallel and are reported in index order.
pub fn run_study(spec: &ScenarioSpec) -> Result<MetricsReport> {
    spec.validate()?;
    let (model, provenance) = model_for(spec.n, &spec.counts)?;
    let replicates =
        (0..spec.replicates).into_par_iter().map(|rep| run_replicate(spec, &model, rep)).collect::<Result<Vec<_>>>()?;
    let all: Vec<Metrics> = replicates.iter().map(|r| r.metrics).collect();
    Ok(MetricsReport { spec: spec.clone(), counts_provenance: provenance, mean: Metrics::mean(&all), replicates })
}

/// One replicate of [`run_study`].
pub fn run_replicate(spec: &ScenarioSpec, model: &dyn DistanceModel, rep: usize) -> Result<ReplicateResult> {
    let mut rng = replicate_rng(spec.seed, rep);
    let draw = MixtureDraw {
        n: spec.n,
        sample_size: spec.sample_size,
        g: spec.true_g,
        theta_min: spec.theta_min,
        theta_max: spec.theta_max,
        min_distance: spec.separation(),
        sampler: spec.sampler_method(),
    };
    let mut scenario = draw_mixture_scenario(&draw, &mut rng)?;
    scenario.units = censor(&scenario.units, spec.censoring, &mut rng)?;
    let data = scenario.dataset()?;
    let cfg = EmConfig { n_starts: spec.starts, seed: rng.next_u64(), ..EmConfig::default() };
    let g_values = spec.g_values();
    let selection = select_g(&data, &g_values, model, &cfg, spec.bic_convention)?;
    let fit = selection.fit_for(spec.true_g).unwrap_or_else(|| selection.selected());
    let unit_rows = scenario.unit_rows(&data);
    let metrics = score(&scenario, fit, &unit_rows, selection.g_hat == spec.true_g)?;
    Ok(ReplicateResult {
        replicate: rep,
        truth: scenario.truth.clone(),
        g_hat: selection.g_hat,
        bic_curve: selection.bic_curve.clone(),
        evaluated: fit.params.clone(),
        log_lik: fit.log_lik,
        iterations: fit.iterations,
        metrics,
        diagnostics: EmDiagnostics::of(&selection.fits, &g_values),
    })
}

/// Metrics of `fit` against the truth after label matching. A true
/// component left unmatched counts as `m_ρ = 1`, `φ_ρ = 0`, `m_θ = 1`.
pub fn score(scenario: &Scenario, fit: &MixtureFit, unit_rows: &[usize], g_correct: bool) -> Result<Metrics> {
    let truth = &scenario.truth;
    let true_rho: Vec<Ranking> = truth.components.iter().map(|c| c.consensus.clone()).collect();
    let fit_rho: Vec<Ranking> = fit.params.components.iter().map(|c| c.consensus.clone()).collect();
    let mapping = match_labels(&true_rho, &fit_rho)?;
    let mut m = Metrics { phi_g: if g_correct { 1.0 } else { 0.0 }, ..Metrics::default() };
    for (k, t) in truth.components.iter().enumerate() {
        match mapping.iter().position(|&x| x == Some(k)) {
            Some(j) => {
                let f = &fit.params.components[j];
                m.m_theta += metric_m_theta(f.theta, t.theta)?;
                m.m_rho += metric_m_rho(&f.consensus, &t.consensus)?;
                m.phi_rho += metric_phi_rho(&f.consensus, &t.consensus)?;
            }
            None => {
                m.m_theta += 1.0;
                m.m_rho += 1.0;
            }
        }
    }
    let g = truth.g() as f64;
    m.m_theta /= g;
    m.m_rho /= g;
    m.phi_rho /= g;
    let assigned: Vec<usize> = unit_rows
        .iter()
        .map(|&row| {
            let z = fit.responsibilities.row(row);
            (0..z.len()).max_by(|&a, &b| z[a].total_cmp(&z[b]).then(b.cmp(&a))).unwrap_or(0)
        })
        .collect();
    m.phi_z = metric_phi_z(&assigned, &scenario.labels, &mapping)?;
    Ok(m)
}

/// Accuracy of `θ̂` under the exact, rate-function and vMF partition
/// functions on homogeneous samples with a uniformly drawn consensus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaStudySpec {
    pub n: usize,
    pub sample_size: usize,
    pub thetas: Vec<f64>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub counts: CountsConfig,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub sampler: Option<SamplerMethod>,
}

impl ThetaStudySpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || self.sample_size == 0 || self.replicates == 0 || self.thetas.is_empty() {
            return Err(Error::InvalidArgument(
                "n >= 4, sample_size >= 1, replicates >= 1 and at least one theta required".into(),
            ));
        }
        if let Some(t) = self.thetas.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidArgument(format!("theta values must be positive, got {t}")));
        }
        Ok(())
    }
}

/// `θ̂` from each partition function for one sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ThetaEstimates {
    pub exact: Option<f64>,
    pub new: f64,
    pub vmf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ThetaCell {
    pub theta: f64,
    pub estimates: Vec<ThetaEstimates>,
    /// Mean `|θ̂ - θ|` per method.
    pub mean_abs_error: ThetaEstimates,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ThetaStudyReport {
    pub spec: ThetaStudySpec,
    pub cells: Vec<ThetaCell>,
}

/// For every `θ` and replicate: sample, take the Borda consensus, and solve
/// for `θ̂` under each partition function. The rate-function table is used
/// at every `n`, including those with an exact table.
pub fn run_theta_study(spec: &ThetaStudySpec) -> Result<ThetaStudyReport> {
    spec.validate()?;
    let n = spec.n;
    let exact = (n <= spec.counts.exact_max).then(|| spec.counts.exact(n)).transpose()?.map(PartitionEvaluator::new);
    let new = PartitionEvaluator::new(spec.counts.approx(n)?);
    let vmf = VmfModel::new(n)?;
    let solver = spec.solver.unwrap_or_default();
    let method = spec.sampler.unwrap_or_else(|| default_method(n));
    let cells = spec
        .thetas
        .iter()
        .enumerate()
        .map(|(cell, &theta)| {
            let estimates = (0..spec.replicates)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = replicate_rng(spec.seed, cell * spec.replicates + rep);
                    let params = MmsParams::new(Ranking::random(n, &mut rng), theta)?;
                    let data = sample_mms(&params, spec.sample_size, method, rng.next_u64())?;
                    Ok(ThetaEstimates {
                        exact: exact.as_ref().map(|m| fit_mms(&data, m, &solver)).transpose()?.map(|f| f.params.theta),
                        new: fit_mms(&data, &new, &solver)?.params.theta,
                        vmf: fit_mms(&data, &vmf, &solver)?.params.theta,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let k = estimates.len() as f64;
            let err =
                |f: &dyn Fn(&ThetaEstimates) -> f64| estimates.iter().map(|e| (f(e) - theta).abs()).sum::<f64>() / k;
            let mean_abs_error = ThetaEstimates {
                exact: exact.as_ref().map(|_| err(&|e| e.exact.unwrap_or(f64::NAN))),
                new: err(&|e| e.new),
                vmf: err(&|e| e.vmf),
            };
            Ok(ThetaCell { theta, estimates, mean_abs_error })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThetaStudyReport { spec: spec.clone(), cells })
}
