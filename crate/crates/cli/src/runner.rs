//! Parallel Monte-Carlo replication and the table files it produces.

use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use sas_core::metrics::{self, EfficiencyReport, Method, ReplicateResult, SummaryTable};
use sas_core::sim::{self, OracleBeta, ScenarioConfig, XNewKind};
use sas_core::study::{self, StudyDesign};
use sas_core::SasSettings;

use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, write_text};

/// Largest tolerated fraction of failed replicates.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

/// Builds a study design: evaluates `β₀` once and derives the targets.
pub fn design(
    scenario: ScenarioConfig,
    settings: SasSettings,
    kinds: &[XNewKind],
    oracle_eval_n: usize,
    test_size: usize,
) -> CliResult<StudyDesign> {
    info!("evaluating oracle coefficient for {} on {oracle_eval_n} draws", scenario.name());
    let oracle: OracleBeta = sim::evaluate_oracle_beta(&scenario, oracle_eval_n)?;
    let targets = study::standard_targets(&scenario, &oracle)?
        .into_iter()
        .filter(|(label, _)| kinds.iter().any(|k| k.label() == label))
        .collect();
    Ok(StudyDesign {
        scenario,
        settings,
        test_size,
        oracle,
        targets,
    })
}

/// Successful replicates sorted by id plus the failures.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutcome {
    pub results: Vec<ReplicateResult>,
    pub failures: Vec<(u64, String)>,
}

impl StudyOutcome {
    pub fn failure_fraction(&self) -> f64 {
        let total = self.results.len() + self.failures.len();
        self.failures.len() as f64 / total.max(1) as f64
    }
}

/// Runs replicates `0..replicates` on `workers` threads. The outcome does not
/// depend on the worker count.
pub fn run_study(design: &StudyDesign, replicates: usize, workers: usize) -> CliResult<StudyOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    let mut raw: Vec<(u64, Result<ReplicateResult, String>)> = pool.install(|| {
        (0..replicates as u64)
            .into_par_iter()
            .map(|id| {
                let r = study::run_replicate(design, id).map_err(|e| e.to_string());
                match &r {
                    Ok(_) => info!("replicate {id} done"),
                    Err(e) => warn!("replicate {id} failed: {e}"),
                }
                (id, r)
            })
            .collect()
    });
    raw.sort_by_key(|(id, _)| *id);
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in raw {
        match r {
            Ok(res) => results.push(res),
            Err(e) => failures.push((id, e)),
        }
    }
    Ok(StudyOutcome { results, failures })
}

/// Per-kind comparison of supervised and semi-supervised variances.
pub fn efficiency_by_kind(results: &[ReplicateResult]) -> CliResult<Vec<(String, EfficiencyReport)>> {
    let mut kinds: Vec<String> = Vec::new();
    for r in results {
        for (k, _, _) in &r.variance_pairs {
            if !kinds.contains(k) {
                kinds.push(k.clone());
            }
        }
    }
    let mut out = Vec::new();
    for k in kinds {
        let pairs: Vec<(f64, f64)> = results
            .iter()
            .flat_map(|r| r.variance_pairs.iter())
            .filter(|(kind, _, _)| *kind == k)
            .map(|(_, sl, sas)| (*sl, *sas))
            .collect();
        out.push((k, metrics::efficiency_check(&pairs)?));
    }
    Ok(out)
}

/// Efficiency over every kind pooled.
pub fn efficiency_pooled(results: &[ReplicateResult]) -> CliResult<EfficiencyReport> {
    let pairs: Vec<(f64, f64)> = results
        .iter()
        .flat_map(|r| r.variance_pairs.iter().map(|(_, sl, sas)| (*sl, *sas)))
        .collect();
    Ok(metrics::efficiency_check(&pairs)?)
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    preset: String,
    p: usize,
    q: usize,
    n_labeled: usize,
    n_total: usize,
    seed: u64,
    replicates_requested: usize,
    replicates_succeeded: usize,
    failures: Vec<FailureJson<'a>>,
    oracle_eta: [f64; 4],
    oracle_evaluation_size: usize,
    auc: AucJson,
    cells: Vec<CellJson<'a>>,
    efficiency: Vec<EfficiencyJson<'a>>,
}

#[derive(Serialize)]
struct FailureJson<'a> {
    replicate_id: u64,
    error: &'a str,
}

#[derive(Serialize)]
struct AucJson {
    sas: f64,
    slasso: f64,
    oracle: f64,
}

#[derive(Serialize)]
struct CellJson<'a> {
    x_kind: &'a str,
    method: &'static str,
    truth: f64,
    plug_in_bias: f64,
    plug_in_ese: f64,
    plug_in_rmse: f64,
    bias: f64,
    ese: f64,
    ase: f64,
    rmse: f64,
    cp: f64,
    replicates: usize,
}

#[derive(Serialize)]
struct EfficiencyJson<'a> {
    x_kind: &'a str,
    mean_difference: f64,
    fraction_supervised_larger: f64,
    pairs: usize,
}

fn csv_table(header: &str, lines: impl Iterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for l in lines {
        s.push_str(&l);
        s.push('\n');
    }
    s
}

/// Writes `auc.csv`, `estimation.csv`,
/// `inference.csv`, `efficiency.csv`, `replicates.csv` and
/// `summary.json` into `dir`.
pub fn write_tables(dir: &Path, design: &StudyDesign, replicates: usize, outcome: &StudyOutcome) -> CliResult<SummaryTable> {
    let table = metrics::aggregate(&outcome.results)?;
    let efficiency = efficiency_by_kind(&outcome.results)?;
    let preset = design.scenario.name();
    let f = fmt_f64;

    let auc = &table.auc;
    write_text(
        &dir.join("auc.csv"),
        &csv_table(
            "preset,method,auc,replicates",
            [("SAS", auc.sas), ("SLASSO", auc.slasso), ("Oracle", auc.oracle)]
                .into_iter()
                .map(|(m, v)| format!("{preset},{m},{},{}", f(v), auc.replicates)),
        ),
    )?;
    write_text(
        &dir.join("estimation.csv"),
        &csv_table(
            "preset,type,method,truth,bias,ese,rmse,replicates",
            table.rows.iter().map(|r| {
                format!(
                    "{preset},{},{},{},{},{},{},{}",
                    r.x_kind,
                    r.method.label(),
                    f(r.truth),
                    f(r.plug_in_bias),
                    f(r.plug_in_ese),
                    f(r.plug_in_rmse),
                    r.replicates
                )
            }),
        ),
    )?;
    write_text(
        &dir.join("inference.csv"),
        &csv_table(
            "preset,type,method,truth,bias,ese,ase,rmse,cp,replicates",
            table.rows.iter().map(|r| {
                format!(
                    "{preset},{},{},{},{},{},{},{},{},{}",
                    r.x_kind,
                    r.method.label(),
                    f(r.truth),
                    f(r.bias),
                    f(r.ese),
                    f(r.ase),
                    f(r.rmse),
                    f(r.cp),
                    r.replicates
                )
            }),
        ),
    )?;
    write_text(
        &dir.join("efficiency.csv"),
        &csv_table(
            "preset,type,mean_difference,fraction_supervised_larger,pairs",
            efficiency.iter().map(|(k, e)| {
                format!(
                    "{preset},{k},{},{},{}",
                    f(e.mean_difference),
                    f(e.fraction_supervised_larger),
                    e.pairs
                )
            }),
        ),
    )?;
    write_text(
        &dir.join("replicates.csv"),
        &csv_table(
            "replicate,type,method,plug_in,debiased,v_hat,std_error,ci_lo,ci_hi,truth,covers,auc",
            outcome.results.iter().flat_map(|r| {
                r.estimates.iter().map(move |e| {
                    let auc = match e.method {
                        Method::Sas => r.auc.sas,
                        Method::Slasso => r.auc.slasso,
                    };
                    format!(
                        "{},{},{},{},{},{},{},{},{},{},{},{}",
                        r.replicate_id,
                        e.x_kind,
                        e.method.label(),
                        f(e.plug_in),
                        f(e.debiased),
                        f(e.v_hat),
                        f(e.std_error),
                        f(e.ci.0),
                        f(e.ci.1),
                        f(e.truth),
                        e.covers() as u8,
                        f(auc)
                    )
                })
            }),
        ),
    )?;

    let cfg = &design.scenario;
    let summary = SummaryJson {
        preset: preset.clone(),
        p: cfg.p,
        q: cfg.q,
        n_labeled: cfg.n_labeled,
        n_total: cfg.n_total,
        seed: cfg.seed,
        replicates_requested: replicates,
        replicates_succeeded: outcome.results.len(),
        failures: outcome
            .failures
            .iter()
            .map(|(id, e)| FailureJson {
                replicate_id: *id,
                error: e,
            })
            .collect(),
        oracle_eta: design.oracle.eta,
        oracle_evaluation_size: design.oracle.evaluation_sample_size,
        auc: AucJson {
            sas: auc.sas,
            slasso: auc.slasso,
            oracle: auc.oracle,
        },
        cells: table
            .rows
            .iter()
            .map(|r| CellJson {
                x_kind: &r.x_kind,
                method: r.method.label(),
                truth: r.truth,
                plug_in_bias: r.plug_in_bias,
                plug_in_ese: r.plug_in_ese,
                plug_in_rmse: r.plug_in_rmse,
                bias: r.bias,
                ese: r.ese,
                ase: r.ase,
                rmse: r.rmse,
                cp: r.cp,
                replicates: r.replicates,
            })
            .collect(),
        efficiency: efficiency
            .iter()
            .map(|(k, e)| EfficiencyJson {
                x_kind: k,
                mean_difference: e.mean_difference,
                fraction_supervised_larger: e.fraction_supervised_larger,
                pairs: e.pairs,
            })
            .collect(),
    };
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    write_text(&dir.join("summary.json"), &json)?;
    Ok(table)
}
