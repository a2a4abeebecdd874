//! Discrimination and Monte-Carlo summary statistics.
//!
//! Aggregates sort their inputs before summing, so a summary does not depend
//! on the order in which replicates arrive.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};

/// Area under the ROC curve: the Mann-Whitney probability that a positive
/// outscores a negative, ties counted as one half. Labels must be 0 or 1.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    check_len("auc labels", scores.len(), labels.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Domain("auc scores contain NaN".into()));
    }
    if labels.iter().any(|&l| l != 0.0 && l != 1.0) {
        return Err(Error::Domain("auc labels must be 0 or 1".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Domain("auc needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of midranks of the positives.
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let midrank = (start + end + 1) as f64 / 2.0;
        let positives = order[start..end].iter().filter(|&&i| labels[i] == 1.0).count();
        rank_sum += midrank * positives as f64;
        start = end;
    }
    let np = n_pos as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Estimation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Surrogate-assisted semi-supervised.
    Sas,
    /// Lasso on the labeled rows only.
    Slasso,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Sas => "SAS",
            Method::Slasso => "SLASSO",
        }
    }
}

/// One method's estimates of `x_newᵀβ₀` in one replicate, on the linear
/// scale.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord {
    pub x_kind: String,
    pub method: Method,
    /// `x_newᵀβ̂` from the full-data fit.
    pub plug_in: f64,
    /// `‖x_new‖₂ θ̂`.
    pub debiased: f64,
    pub v_hat: f64,
    /// `‖x_new‖₂ √(V̂/n)`.
    pub std_error: f64,
    pub ci: (f64, f64),
    /// `x_newᵀβ₀`.
    pub truth: f64,
}

impl EstimateRecord {
    pub fn covers(&self) -> bool {
        self.ci.0 <= self.truth && self.truth <= self.ci.1
    }
}

/// Held-out AUC of each method's risk scores in one replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AucRecord {
    pub sas: f64,
    pub slasso: f64,
    pub oracle: f64,
}

/// Everything recorded for one simulated data set.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub replicate_id: u64,
    pub estimates: Vec<EstimateRecord>,
    pub auc: AucRecord,
    /// `(V̂_SL, V̂_SAS)` per `x_new` kind.
    pub variance_pairs: Vec<(String, f64, f64)>,
    pub all_converged: bool,
}

/// Summary of one `(x_kind, method)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub x_kind: String,
    pub method: Method,
    pub truth: f64,
    pub plug_in_bias: f64,
    pub plug_in_ese: f64,
    pub plug_in_rmse: f64,
    pub bias: f64,
    /// Sample standard deviation (divisor `R − 1`).
    pub ese: f64,
    /// Mean estimated standard error.
    pub ase: f64,
    /// Root mean squared error (divisor `R`).
    pub rmse: f64,
    /// Coverage of the linear-scale interval.
    pub cp: f64,
    pub replicates: usize,
}

/// Mean held-out AUC per method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AucSummary {
    pub sas: f64,
    pub slasso: f64,
    pub oracle: f64,
    pub replicates: usize,
}

/// Monte-Carlo summary over replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
    pub auc: AucSummary,
}

impl SummaryTable {
    pub fn row(&self, x_kind: &str, method: Method) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.x_kind == x_kind && r.method == method)
    }
}

fn order_free_mean(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation with divisor `len − 1`.
fn sample_sd(values: &[f64]) -> f64 {
    let mean = order_free_mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    libm::sqrt(order_free_mean(&sq) * values.len() as f64 / (values.len() - 1) as f64)
}

/// `(bias, ese, rmse)` of estimates against a fixed truth.
fn error_summary(estimates: &[f64], truth: f64) -> (f64, f64, f64) {
    let errors: Vec<f64> = estimates.iter().map(|e| e - truth).collect();
    let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
    (order_free_mean(&errors), sample_sd(estimates), libm::sqrt(order_free_mean(&sq)))
}

/// Bias, ESE, ASE, rMSE and coverage per `(x_kind, method)` plus mean AUCs.
pub fn aggregate(results: &[ReplicateResult]) -> Result<SummaryTable> {
    if results.len() < 2 {
        return Err(Error::Domain(format!("aggregation needs >= 2 replicates, got {}", results.len())));
    }
    let mut cells: BTreeMap<(String, Method), Vec<&EstimateRecord>> = BTreeMap::new();
    for r in results {
        for e in &r.estimates {
            cells.entry((e.x_kind.clone(), e.method)).or_default().push(e);
        }
    }
    let mut rows = Vec::with_capacity(cells.len());
    for ((x_kind, method), recs) in cells {
        if recs.len() < 2 {
            return Err(Error::Domain(format!("cell {x_kind}/{} has fewer than 2 replicates", method.label())));
        }
        let truth = recs[0].truth;
        if recs.iter().any(|r| r.truth != truth) {
            return Err(Error::Domain(format!("cell {x_kind}/{} mixes different truths", method.label())));
        }
        let plug: Vec<f64> = recs.iter().map(|r| r.plug_in).collect();
        let deb: Vec<f64> = recs.iter().map(|r| r.debiased).collect();
        let se: Vec<f64> = recs.iter().map(|r| r.std_error).collect();
        let cov: Vec<f64> = recs.iter().map(|r| r.covers() as u8 as f64).collect();
        let (plug_in_bias, plug_in_ese, plug_in_rmse) = error_summary(&plug, truth);
        let (bias, ese, rmse) = error_summary(&deb, truth);
        rows.push(SummaryRow {
            x_kind,
            method,
            truth,
            plug_in_bias,
            plug_in_ese,
            plug_in_rmse,
            bias,
            ese,
            ase: order_free_mean(&se),
            rmse,
            cp: order_free_mean(&cov),
            replicates: recs.len(),
        });
    }
    let pick = |f: fn(&AucRecord) -> f64| order_free_mean(&results.iter().map(|r| f(&r.auc)).collect::<Vec<_>>());
    Ok(SummaryTable {
        rows,
        auc: AucSummary {
            sas: pick(|a| a.sas),
            slasso: pick(|a| a.slasso),
            oracle: pick(|a| a.oracle),
            replicates: results.len(),
        },
    })
}

/// Comparison of the supervised and semi-supervised variance estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyReport {
    /// Mean of `V̂_SL − V̂_SAS`.
    pub mean_difference: f64,
    /// Fraction of pairs with `V̂_SL ≥ V̂_SAS`.
    pub fraction_supervised_larger: f64,
    pub pairs: usize,
}

/// Summarizes `(V̂_SL, V̂_SAS)` pairs.
pub fn efficiency_check(pairs: &[(f64, f64)]) -> Result<EfficiencyReport> {
    if pairs.is_empty() {
        return Err(Error::Domain("efficiency check needs at least one pair".into()));
    }
    let diffs: Vec<f64> = pairs.iter().map(|(sl, sas)| sl - sas).collect();
    let larger: Vec<f64> = pairs.iter().map(|(sl, sas)| (sl >= sas) as u8 as f64).collect();
    Ok(EfficiencyReport {
        mean_difference: order_free_mean(&diffs),
        fraction_supervised_larger: order_free_mean(&larger),
        pairs: pairs.len(),
    })
}
