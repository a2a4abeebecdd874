//! The five subcommands. Each validates its configuration before computing.

use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;

use sas_core::linalg::dot;
use sas_core::pipeline::{self, SelectedLambda};
use sas_core::sim::{self, Scenario};
use sas_core::study::DEFAULT_TEST_SIZE;
use sas_core::{LambdaRule, SemiSupervisedData};

use crate::artifact::ModelArtifact;
use crate::config::{CvTarget, RunConfig, XNewSpec, DEFAULT_ORACLE_EVAL_N};
use crate::dataset::{self, LoadedDataset};
use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, results_line, write_text, RESULTS_HEADER};
use crate::runner::{self, MAX_FAILURE_FRACTION};

/// Resolves a target specification to a full `p + 1` vector.
pub fn resolve_x_new(spec: &XNewSpec, data: &SemiSupervisedData) -> CliResult<Vec<f64>> {
    let width = data.n_covariates() + 1;
    match (&spec.x, spec.row) {
        (Some(x), None) => {
            if x.len() != width {
                return Err(CliError::Config(format!(
                    "x_new `{}` has {} entries; expected {width} (intercept first)",
                    spec.id,
                    x.len()
                )));
            }
            Ok(x.clone())
        }
        (None, Some(r)) => {
            if r >= data.n_total() {
                return Err(CliError::Config(format!(
                    "x_new `{}` references row {r}; the data has {} rows",
                    spec.id,
                    data.n_total()
                )));
            }
            Ok(data.x().row(r).to_vec())
        }
        _ => Err(CliError::Config(format!(
            "x_new `{}` needs exactly one of `x` or `row`",
            spec.id
        ))),
    }
}

fn load(config: &RunConfig) -> CliResult<LoadedDataset> {
    let paths = config.require_data()?;
    Ok(dataset::load_dataset(&paths.labeled, &paths.unlabeled)?)
}

/// Files written by `fit`.
pub fn fit_paths(out: &Path) -> (PathBuf, PathBuf) {
    (out.join("model.json"), out.join("results.csv"))
}

/// Fits the model, writes `model.json` and `results.csv`.
pub fn cmd_fit(config: &RunConfig) -> CliResult<ModelArtifact> {
    let settings = config.settings()?;
    let out = config.require_out()?.to_path_buf();
    if config.x_new.is_empty() {
        return Err(CliError::Config("fit needs at least one `x_new` entry".into()));
    }
    let dataset = load(config)?;
    let data = &dataset.data;
    let targets = config
        .x_new
        .iter()
        .map(|s| Ok((s.id.clone(), resolve_x_new(s, data)?)))
        .collect::<CliResult<Vec<_>>>()?;
    info!(
        "fitting n = {}, N = {}, p = {}, q = {}",
        data.n_labeled(),
        data.n_total(),
        data.n_covariates(),
        data.n_surrogates()
    );
    let fit = pipeline::fit_sas(data, &settings)?;
    let mut results = String::from(RESULTS_HEADER);
    results.push('\n');
    for (id, x) in &targets {
        let inf = fit.infer(data, x, &settings.solver)?;
        results.push_str(&results_line(id, &inf.interval));
        results.push('\n');
    }
    let artifact = ModelArtifact::from_fit(&fit, &dataset);
    let (model_path, results_path) = fit_paths(&out);
    write_text(&model_path, &artifact.to_json())?;
    write_text(&results_path, &results)?;
    Ok(artifact)
}

#[derive(Serialize)]
struct TruthJson {
    preset: String,
    p: usize,
    q: usize,
    n_labeled: usize,
    n_total: usize,
    seed: u64,
    theta: f64,
    nu: Option<f64>,
    mu_s: f64,
    sigma_s: f64,
    alpha: Vec<f64>,
    xi: Option<Vec<f64>>,
    /// Outcomes of the unlabeled rows, in file order.
    y_unlabeled: Vec<f64>,
    beta0: Option<Vec<f64>>,
    oracle_eta: Option<[f64; 4]>,
    oracle_evaluation_size: Option<usize>,
}

/// Writes `labeled.csv`, `unlabeled.csv` and `truth.json`.
pub fn cmd_simulate(config: &RunConfig) -> CliResult<()> {
    let cfg = config.scenario_config()?;
    let out = config.require_out()?.to_path_buf();
    info!("simulating {} with seed {}", cfg.name(), cfg.seed);
    let simulated = sim::generate(&cfg)?;
    let params = cfg.params();
    let oracle = match config.oracle_eval_n {
        Some(n) => Some(sim::evaluate_oracle_beta(&cfg, n)?),
        None => None,
    };
    let is_i = params.scenario == Scenario::I;
    let truth = TruthJson {
        preset: cfg.name(),
        p: cfg.p,
        q: cfg.q,
        n_labeled: cfg.n_labeled,
        n_total: cfg.n_total,
        seed: cfg.seed,
        theta: params.theta,
        nu: (!is_i).then_some(params.nu),
        mu_s: params.mu_s,
        sigma_s: params.sigma_s,
        alpha: params.alpha.clone(),
        xi: is_i.then(|| params.xi.clone()),
        y_unlabeled: simulated.truth.y_all[cfg.n_labeled..].to_vec(),
        beta0: oracle.as_ref().map(|o| o.beta0.clone()),
        oracle_eta: oracle.as_ref().map(|o| o.eta),
        oracle_evaluation_size: oracle.as_ref().map(|o| o.evaluation_sample_size),
    };
    let dataset = LoadedDataset {
        x_columns: dataset::default_names("x", cfg.p),
        s_columns: dataset::default_names("s", cfg.q),
        data: simulated.data,
    };
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let (lab, unl) = dataset::dataset_paths(&out);
    dataset::write_dataset(&dataset, &lab, &unl)?;
    let mut json = serde_json::to_string_pretty(&truth).expect("truth serializes");
    json.push('\n');
    write_text(&out.join("truth.json"), &json)
}

/// Runs the Monte-Carlo study and writes its tables.
pub fn cmd_replicate(config: &RunConfig) -> CliResult<runner::StudyOutcome> {
    let cfg = config.scenario_config()?;
    let settings = config.settings()?;
    let replicates = config.replicates()?;
    let workers = config.workers()?;
    let kinds = config.target_kinds()?;
    let out = config.require_out()?.to_path_buf();
    let test_size = config.test_size.unwrap_or(DEFAULT_TEST_SIZE);
    if test_size < 2 {
        return Err(CliError::Config(format!("test_size must be >= 2, got {test_size}")));
    }
    let design = runner::design(
        cfg,
        settings,
        &kinds,
        config.oracle_eval_n.unwrap_or(DEFAULT_ORACLE_EVAL_N),
        test_size,
    )?;
    info!("running {replicates} replicates on {workers} workers");
    let outcome = runner::run_study(&design, replicates, workers)?;
    if outcome.results.len() < 2 {
        return Err(CliError::Numerical(format!(
            "{} of {replicates} replicates failed; nothing to aggregate",
            outcome.failures.len()
        )));
    }
    runner::write_tables(&out, &design, replicates, &outcome)?;
    if outcome.failure_fraction() > MAX_FAILURE_FRACTION {
        return Err(CliError::Numerical(format!(
            "{} of {replicates} replicates failed (limit {:.0}%)",
            outcome.failures.len(),
            MAX_FAILURE_FRACTION * 100.0
        )));
    }
    Ok(outcome)
}

/// Applies a saved model to new covariate rows; writes `predictions.csv`.
pub fn cmd_predict(config: &RunConfig) -> CliResult<()> {
    let model_path = config.model.as_ref().ok_or_else(|| CliError::Config("predict needs `model`".into()))?;
    let rows_path = config.rows.as_ref().ok_or_else(|| CliError::Config("predict needs `rows`".into()))?;
    let out = config.require_out()?.to_path_buf();
    let text = std::fs::read_to_string(model_path).map_err(|e| CliError::io(model_path, e))?;
    let model = ModelArtifact::from_json(&text)?;
    let link = model.link_kind()?;
    let x = dataset::load_covariates(rows_path, &model.x_columns)?;
    let mut s = String::from("row,linear,response\n");
    for i in 0..x.rows() {
        let eta = dot(x.row(i), &model.beta);
        s.push_str(&format!("{i},{},{}\n", fmt_f64(eta), fmt_f64(link.mean(eta))));
    }
    write_text(&out.join("predictions.csv"), &s)
}

/// Cross-validates one nuisance penalty; writes `cv.csv`.
pub fn cmd_cv(config: &RunConfig) -> CliResult<SelectedLambda> {
    let settings = config.settings()?;
    let target = config.cv_target.unwrap_or(CvTarget::Beta);
    let rule = match target {
        CvTarget::Gamma => settings.lambda_gamma,
        CvTarget::Beta => settings.lambda_beta,
    };
    if !matches!(rule, LambdaRule::Cv { .. }) {
        return Err(CliError::Config(format!(
            "cv needs a `cv` directive for lambda_{}",
            if target == CvTarget::Gamma { "gamma" } else { "beta" }
        )));
    }
    let out = config.require_out()?.to_path_buf();
    let dataset = load(config)?;
    let data = &dataset.data;
    let selected = match target {
        CvTarget::Gamma => pipeline::select_lambda_gamma(data, &settings)?,
        CvTarget::Beta => {
            let gamma = if data.is_supervised() {
                None
            } else {
                let g = pipeline::select_lambda_gamma(data, &settings)?;
                Some(sas_core::sas::fit_imputation(data, settings.link, g.value, &settings.solver)?.coefficients)
            };
            pipeline::select_lambda_beta(data, gamma.as_deref(), &settings)?
        }
    };
    let cv = selected.cv.as_ref().expect("cv rule yields a trace");
    let mut s = String::from("lambda,mean_loss,chosen\n");
    for (i, (l, m)) in cv.grid.iter().zip(&cv.mean_losses).enumerate() {
        s.push_str(&format!("{},{},{}\n", fmt_f64(*l), fmt_f64(*m), (i == cv.chosen_index) as u8));
    }
    write_text(&out.join("cv.csv"), &s)?;
    Ok(selected)
}
