//! JSON document describing a mixture fit together with the configuration
//! that produced it.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::counts::{CountsConfig, Provenance};
use crate::error::{Error, Result};
use crate::mixture::{BicConvention, EmConfig, MixtureFit};
use crate::partition::BoundaryFlag;
use crate::ranking::RankingDataset;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitResultDocument {
    pub schema_version: u32,
    pub n: usize,
    pub items: Vec<String>,
    pub sample_size: u64,
    pub distinct_rows: usize,
    pub full_data: bool,
    pub g_range: Vec<usize>,
    pub selected_g: usize,
    pub bic_convention: BicConvention,
    /// BIC of each fit in `g_range` under `bic_convention`.
    pub bic_curve: Vec<f64>,
    pub em: EmConfig,
    pub counts: CountsRecord,
    pub fits: Vec<FitRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CountsRecord {
    pub provenance: Provenance,
    pub config: CountsConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitRecord {
    /// Number of components requested.
    pub g: usize,
    /// Number left after empty components were dropped.
    pub fitted_g: usize,
    pub weights: Vec<f64>,
    /// Item-indexed rank vectors.
    pub consensus: Vec<Vec<u32>>,
    pub thetas: Vec<f64>,
    pub boundary: Vec<BoundaryFlag>,
    pub log_lik: f64,
    pub bic_full: f64,
    pub bic_continuous: f64,
    pub cluster_sizes: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub start: usize,
    pub trace: Vec<f64>,
    pub disrupted: Vec<usize>,
    /// Per distinct data row, in dataset order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub responsibilities: Option<Vec<Vec<f64>>>,
}

impl FitRecord {
    pub fn new(g: usize, fit: &MixtureFit, with_responsibilities: bool) -> Self {
        FitRecord {
            g,
            fitted_g: fit.params.g(),
            weights: fit.params.weights.clone(),
            consensus: fit.params.components.iter().map(|c| c.consensus.ranks().to_vec()).collect(),
            thetas: fit.params.components.iter().map(|c| c.theta).collect(),
            boundary: fit.boundary.clone(),
            log_lik: fit.log_lik,
            bic_full: fit.bic,
            bic_continuous: fit.bic_continuous,
            cluster_sizes: fit.cluster_sizes.clone(),
            iterations: fit.iterations,
            converged: fit.converged,
            start: fit.start,
            trace: fit.trace.clone(),
            disrupted: fit.disrupted.clone(),
            responsibilities: with_responsibilities.then(|| fit.responsibilities.rows().map(<[f64]>::to_vec).collect()),
        }
    }

    pub fn bic(&self, convention: BicConvention) -> f64 {
        match convention {
            BicConvention::Full => self.bic_full,
            BicConvention::Continuous => self.bic_continuous,
        }
    }
}

impl FitResultDocument {
    /// Assembles a document from fits over consecutive `G` values.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        data: &RankingDataset,
        fits: &[(usize, MixtureFit)],
        selected_g: usize,
        convention: BicConvention,
        em: &EmConfig,
        counts: CountsRecord,
        with_responsibilities: bool,
    ) -> Self {
        let records: Vec<FitRecord> = fits.iter().map(|(g, f)| FitRecord::new(*g, f, with_responsibilities)).collect();
        FitResultDocument {
            schema_version: SCHEMA_VERSION,
            n: data.n_items(),
            items: data.items().to_vec(),
            sample_size: data.total(),
            distinct_rows: data.rows().len(),
            full_data: data.is_full(),
            g_range: fits.iter().map(|(g, _)| *g).collect(),
            selected_g,
            bic_convention: convention,
            bic_curve: records.iter().map(|r| r.bic(convention)).collect(),
            em: em.clone(),
            counts,
            fits: records,
        }
    }

    pub fn selected(&self) -> Option<&FitRecord> {
        self.fits.iter().find(|f| f.g == self.selected_g)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        check_version(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        check_version(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }
}

fn check_version(doc: FitResultDocument) -> Result<FitResultDocument> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::InvalidArgument(format!(
            "unsupported schemaVersion {}, expected {SCHEMA_VERSION}",
            doc.schema_version
        )));
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::exact_counts;
    use crate::mixture::em_fit;
    use crate::partition::PartitionEvaluator;
    use crate::ranking::Ranking;

    fn document(with_resp: bool) -> FitResultDocument {
        let data = RankingDataset::from_rankings(vec![
            Ranking::new(vec![1, 2, 3, 4]).unwrap(),
            Ranking::new(vec![2, 1, 3, 4]).unwrap(),
            Ranking::new(vec![4, 3, 2, 1]).unwrap(),
            Ranking::new(vec![4, 3, 1, 2]).unwrap(),
            Ranking::new(vec![1, 2, 4, 3]).unwrap(),
        ])
        .unwrap();
        let m = PartitionEvaluator::new(exact_counts(4).unwrap());
        let cfg = EmConfig { n_starts: 2, ..EmConfig::default() };
        let fits: Vec<_> = (1..=2).map(|g| (g, em_fit(&data, g, &m, &cfg).unwrap())).collect();
        let counts = CountsRecord { provenance: Provenance::Exact, config: CountsConfig::default() };
        FitResultDocument::new(&data, &fits, 2, BicConvention::Full, &cfg, counts, with_resp)
    }

    #[test]
    fn json_round_trip_is_lossless() {
        for with_resp in [false, true] {
            let doc = document(with_resp);
            let text = doc.to_json().unwrap();
            assert!(text.contains("\"schemaVersion\": 1"));
            assert_eq!(text.contains("responsibilities"), with_resp);
            assert_eq!(FitResultDocument::from_json(&text).unwrap(), doc);
        }
    }

    #[test]
    fn file_round_trip() {
        let doc = document(true);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fit.json");
        doc.write(&path).unwrap();
        assert_eq!(FitResultDocument::read(&path).unwrap(), doc);
        assert_eq!(doc.selected().unwrap().g, 2);
        assert_eq!(doc.bic_curve.len(), 2);
    }

    #[test]
    fn foreign_version_is_rejected() {
        let text = document(false).to_json().unwrap().replace("\"schemaVersion\": 1", "\"schemaVersion\": 99");
        assert!(FitResultDocument::from_json(&text).is_err());
    }
}
