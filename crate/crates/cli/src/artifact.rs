//! Saved model: coefficients, penalties, cross-fitting summaries and a
//! fingerprint of the training data.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sas_core::pipeline::SasFit;
use sas_core::solver::PenalizedFit;
use sas_core::Link;

use crate::dataset::LoadedDataset;
use crate::error::ArtifactError;

/// Current model schema.
pub const SCHEMA_VERSION: u32 = 1;

/// One penalized fit without its trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSummary {
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&PenalizedFit> for FitSummary {
    fn from(f: &PenalizedFit) -> Self {
        FitSummary {
            coefficients: f.coefficients.clone(),
            lambda: f.lambda,
            kkt_residual: f.kkt_residual,
            iterations: f.iterations,
            converged: f.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSummary {
    pub folds: (usize, usize),
    pub gamma: Option<FitSummary>,
    pub beta: FitSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossFitSummary {
    pub folds: usize,
    pub fold_sizes: Vec<usize>,
    pub gamma_k: Vec<FitSummary>,
    pub beta_k: Vec<FitSummary>,
    pub pairs: Vec<PairSummary>,
    pub all_converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyLevels {
    pub gamma: Option<f64>,
    pub beta: f64,
    pub u: f64,
}

/// Size and content hash of a data set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataFingerprint {
    pub n_labeled: usize,
    pub n_total: usize,
    pub p: usize,
    pub q: usize,
    /// SHA-256 of the column names and the little-endian bytes of every value.
    pub sha256: String,
}

impl DataFingerprint {
    pub fn of(dataset: &LoadedDataset) -> Self {
        let data = &dataset.data;
        let mut h = Sha256::new();
        for name in dataset.x_columns.iter().chain(&dataset.s_columns) {
            h.update(name.as_bytes());
            h.update([0u8]);
        }
        for v in data.y().iter().chain(data.w().as_slice()) {
            h.update(v.to_le_bytes());
        }
        DataFingerprint {
            n_labeled: data.n_labeled(),
            n_total: data.n_total(),
            p: data.n_covariates(),
            q: data.n_surrogates(),
            sha256: hex::encode(h.finalize()),
        }
    }
}

/// Serializable fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelArtifact {
    pub schema_version: u32,
    pub link: String,
    pub x_columns: Vec<String>,
    pub s_columns: Vec<String>,
    /// Imputation coefficients over `(1, X, S)`.
    pub gamma: Option<Vec<f64>>,
    /// Prediction coefficients over `(1, X)`.
    pub beta: Vec<f64>,
    pub lambdas: PenaltyLevels,
    pub alpha: f64,
    pub crossfit: CrossFitSummary,
    pub fingerprint: DataFingerprint,
}

impl ModelArtifact {
    pub fn from_fit(fit: &SasFit, dataset: &LoadedDataset) -> Self {
        let b = &fit.bundle;
        let part = b.partition();
        ModelArtifact {
            schema_version: SCHEMA_VERSION,
            link: fit.link.name().to_string(),
            x_columns: dataset.x_columns.clone(),
            s_columns: dataset.s_columns.clone(),
            gamma: fit.gamma.as_ref().map(|g| g.coefficients.clone()),
            beta: fit.beta.coefficients.clone(),
            lambdas: PenaltyLevels {
                gamma: fit.lambda_gamma.as_ref().map(|l| l.value),
                beta: fit.lambda_beta.value,
                u: fit.lambda_u,
            },
            alpha: fit.alpha,
            crossfit: CrossFitSummary {
                folds: part.k(),
                fold_sizes: (0..part.k()).map(|k| part.size(k)).collect(),
                gamma_k: b.gamma_fits().iter().map(FitSummary::from).collect(),
                beta_k: b.beta_fits().iter().map(FitSummary::from).collect(),
                pairs: b
                    .pair_fits()
                    .iter()
                    .map(|pf| PairSummary {
                        folds: pf.folds,
                        gamma: pf.gamma.as_ref().map(FitSummary::from),
                        beta: FitSummary::from(&pf.beta),
                    })
                    .collect(),
                all_converged: b.all_converged(),
            },
            fingerprint: DataFingerprint::of(dataset),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serializes");
        s.push('\n');
        s
    }

    /// Parses a model file, rejecting schema versions newer than
    /// [`SCHEMA_VERSION`] before interpreting any other field.
    pub fn from_json(text: &str) -> Result<Self, ArtifactError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ArtifactError::Malformed(e.to_string()))?;
        let version = value
            .get("schema_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| ArtifactError::Malformed("missing or invalid `schema_version`".into()))?;
        if version > SCHEMA_VERSION as u64 {
            return Err(ArtifactError::UnsupportedVersion {
                found: version,
                supported: SCHEMA_VERSION,
            });
        }
        let artifact: ModelArtifact =
            serde_json::from_value(value).map_err(|e| ArtifactError::Malformed(e.to_string()))?;
        artifact.check()?;
        Ok(artifact)
    }

    fn check(&self) -> Result<(), ArtifactError> {
        self.link_kind()?;
        if self.beta.len() != self.x_columns.len() + 1 {
            return Err(ArtifactError::Inconsistent(format!(
                "beta has {} entries for {} covariate columns",
                self.beta.len(),
                self.x_columns.len()
            )));
        }
        if let Some(g) = &self.gamma {
            if g.len() != self.x_columns.len() + self.s_columns.len() + 1 {
                return Err(ArtifactError::Inconsistent(format!(
                    "gamma has {} entries for {} columns",
                    g.len(),
                    self.x_columns.len() + self.s_columns.len()
                )));
            }
        }
        Ok(())
    }

    pub fn link_kind(&self) -> Result<Link, ArtifactError> {
        Link::from_name(&self.link).ok_or_else(|| ArtifactError::Inconsistent(format!("unknown link `{}`", self.link)))
    }
}
