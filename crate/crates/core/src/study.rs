//! One simulation replicate: generate, fit the semi-supervised and
//! supervised estimators, score each prediction target and the held-out AUC.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Result;
use crate::linalg::dot;
use crate::metrics::{self, AucRecord, EstimateRecord, Method, ReplicateResult};
use crate::pipeline::{self, SasFit, SasSettings};
use crate::rng;
use crate::sas::{self, SemiSupervisedData};
use crate::sim::{self, OracleBeta, ScenarioConfig, XNewKind};

/// Fixed inputs shared by every replicate of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyDesign {
    /// Preset and sizes; the seed field is the study's master seed.
    pub scenario: ScenarioConfig,
    pub settings: SasSettings,
    /// Rows of the independent AUC test set.
    pub test_size: usize,
    pub oracle: OracleBeta,
    /// Labeled prediction targets.
    pub targets: Vec<(String, Vec<f64>)>,
}

/// Default AUC test-set size.
pub const DEFAULT_TEST_SIZE: usize = 100;

/// Builds every target kind for a preset from its oracle coefficient.
pub fn standard_targets(cfg: &ScenarioConfig, oracle: &OracleBeta) -> Result<Vec<(String, Vec<f64>)>> {
    XNewKind::ALL
        .iter()
        .map(|&k| Ok((String::from(k.label()), sim::make_xnew(k, cfg, Some(oracle), cfg.seed)?)))
        .collect()
}

/// Scenario of replicate `id` (its own derived data seed).
pub fn replicate_scenario(design: &StudyDesign, id: u64) -> ScenarioConfig {
    design
        .scenario
        .clone()
        .with_seed(rng::derive_seed(design.scenario.seed, "replicate-data", id))
}

/// Estimator settings of replicate `id` (its own derived fold seed).
pub fn replicate_settings(design: &StudyDesign, id: u64) -> SasSettings {
    let mut s = design.settings.clone();
    s.seed = rng::derive_seed(design.scenario.seed, "replicate-fit", id);
    s
}

fn estimates_for(
    fit: &SasFit,
    data: &SemiSupervisedData,
    method: Method,
    design: &StudyDesign,
    out: &mut Vec<EstimateRecord>,
) -> Result<Vec<(f64, sas::Projection)>> {
    let mut v_hats = Vec::with_capacity(design.targets.len());
    for (label, x) in &design.targets {
        let inf = fit.infer(data, x, &design.settings.solver)?;
        let v_hat = inf.interval.v_hat;
        out.push(EstimateRecord {
            x_kind: label.clone(),
            method,
            plug_in: inf.plug_in_linear,
            debiased: inf.interval.linear_estimate(),
            v_hat: inf.interval.v_hat,
            std_error: inf.interval.standard_error(data.n_labeled()),
            ci: inf.interval.ci_linear,
            truth: dot(x, &design.oracle.beta0),
        });
        v_hats.push((v_hat, inf.projection));
    }
    Ok(v_hats)
}

/// Runs replicate `id` of a study.
pub fn run_replicate(design: &StudyDesign, id: u64) -> Result<ReplicateResult> {
    let cfg = replicate_scenario(design, id);
    let settings = replicate_settings(design, id);
    let sim = sim::generate(&cfg)?;
    let data = &sim.data;
    let labeled = data.labeled_part();

    let sas_fit = pipeline::fit_sas(data, &settings)?;
    let sl_fit = pipeline::fit_sas(&labeled, &settings)?;

    let mut estimates = Vec::with_capacity(2 * design.targets.len());
    let sas_v = estimates_for(&sas_fit, data, Method::Sas, design, &mut estimates)?;
    estimates_for(&sl_fit, &labeled, Method::Slasso, design, &mut estimates)?;

    let mut variance_pairs = Vec::with_capacity(design.targets.len());
    for ((label, _), (v_sas, proj)) in design.targets.iter().zip(sas_v) {
        let v_sl = sas::supervised_variance(&sas_fit.bundle, &proj, data)?;
        variance_pairs.push((label.clone(), v_sl, v_sas));
    }

    let (test_x, test_y) = sim::generate_test_set(&cfg, design.test_size)?;
    let scores = |b: &[f64]| -> Vec<f64> { (0..test_x.rows()).map(|i| dot(test_x.row(i), b)).collect() };
    let auc = AucRecord {
        sas: metrics::auc(&scores(&sas_fit.beta.coefficients), &test_y)?,
        slasso: metrics::auc(&scores(&sl_fit.beta.coefficients), &test_y)?,
        oracle: metrics::auc(&scores(&design.oracle.beta0), &test_y)?,
    };

    Ok(ReplicateResult {
        replicate_id: id,
        estimates,
        auc,
        variance_pairs,
        all_converged: sas_fit.bundle.all_converged()
            && sl_fit.bundle.all_converged()
            && sas_fit.beta.converged
            && sl_fit.beta.converged,
    })
}
