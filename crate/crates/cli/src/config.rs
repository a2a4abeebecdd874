//! JSON run configuration. Every section rejects unknown keys; each command
//! checks that the keys it needs are present before any computation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sas_core::sim::{ScenarioConfig, XNewKind};
use sas_core::{LambdaRule, Link, SasSettings, SolverOptions};

use crate::error::{CliError, CliResult};

/// Paths of the labeled and unlabeled CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub labeled: PathBuf,
    pub unlabeled: PathBuf,
}

/// Simulation preset with optional size overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    /// For example `I-sparse-strong` or `II-dense-moderate`.
    pub preset: String,
    pub p: Option<usize>,
    pub q: Option<usize>,
    /// Labeled rows.
    pub n: Option<usize>,
    /// Total rows.
    #[serde(rename = "N")]
    pub n_total: Option<usize>,
}

/// Cross-validation grid parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvGrid {
    #[serde(default = "CvGrid::default_len")]
    pub grid_len: usize,
    #[serde(default = "CvGrid::default_span")]
    pub span: f64,
    #[serde(default = "CvGrid::default_folds")]
    pub folds: usize,
}

impl CvGrid {
    fn default_len() -> usize {
        10
    }
    fn default_span() -> f64 {
        10.0
    }
    fn default_folds() -> usize {
        5
    }
}

/// Penalty directive: `{"fixed": 0.05}`, `{"rate": 1.0}` or
/// `{"cv": {"grid_len": 10, "span": 10, "folds": 5}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaDirective {
    Fixed(f64),
    Rate(f64),
    Cv(CvGrid),
}

impl From<LambdaDirective> for LambdaRule {
    fn from(d: LambdaDirective) -> Self {
        match d {
            LambdaDirective::Fixed(v) => LambdaRule::Fixed(v),
            LambdaDirective::Rate(c) => LambdaRule::Rate(c),
            LambdaDirective::Cv(g) => LambdaRule::Cv {
                grid_len: g.grid_len,
                span: g.span,
                folds: g.folds,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
}

/// A prediction target: a full vector `x` (intercept entry first, length
/// `p + 1`) or a row of the stacked data (`row`, zero-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XNewSpec {
    pub id: String,
    pub x: Option<Vec<f64>>,
    pub row: Option<usize>,
}

/// Which nuisance model the `cv` command tunes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvTarget {
    Gamma,
    Beta,
}

/// Settings of one command invocation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<DataPaths>,
    pub scenario: Option<ScenarioSpec>,
    pub link: Option<String>,
    pub folds: Option<usize>,
    pub lambda_gamma: Option<LambdaDirective>,
    pub lambda_beta: Option<LambdaDirective>,
    pub lambda_u: Option<LambdaDirective>,
    pub alpha: Option<f64>,
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub x_new: Vec<XNewSpec>,
    pub replicates: Option<usize>,
    /// Sample size of the numerical oracle `β₀`; `simulate` writes `β₀` only
    /// when this is set.
    pub oracle_eval_n: Option<usize>,
    pub test_size: Option<usize>,
    /// Subset of target kinds (`S`, `I`, `D`, `L`, `M`, `H`) for `replicate`.
    pub targets: Option<Vec<String>>,
    pub cv_target: Option<CvTarget>,
    pub model: Option<PathBuf>,
    pub rows: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Default oracle evaluation size for `replicate`.
pub const DEFAULT_ORACLE_EVAL_N: usize = 1_000_000;
/// Default replicate count.
pub const DEFAULT_REPLICATES: usize = 100;

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn link(&self) -> CliResult<Link> {
        match &self.link {
            None => Ok(Link::Logit),
            Some(name) => Link::from_name(name).ok_or_else(|| CliError::Config(format!("unknown link `{name}`"))),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn solver_options(&self) -> CliResult<SolverOptions> {
        let mut opts = SolverOptions::default();
        if let Some(s) = &self.solver {
            if let Some(t) = s.tolerance {
                if !(t.is_finite() && t > 0.0) {
                    return Err(CliError::Config(format!("solver.tolerance must be positive, got {t}")));
                }
                opts.tolerance = t;
            }
            if let Some(m) = s.max_iterations {
                if m == 0 {
                    return Err(CliError::Config("solver.max_iterations must be positive".into()));
                }
                opts.max_iterations = m;
            }
        }
        Ok(opts)
    }

    /// Estimator settings; unset keys take the library defaults.
    pub fn settings(&self) -> CliResult<SasSettings> {
        let mut s = SasSettings {
            link: self.link()?,
            solver: self.solver_options()?,
            seed: self.seed(),
            ..SasSettings::default()
        };
        if let Some(k) = self.folds {
            s.folds = k;
        }
        if let Some(d) = self.lambda_gamma {
            s.lambda_gamma = d.into();
        }
        if let Some(d) = self.lambda_beta {
            s.lambda_beta = d.into();
        }
        if let Some(d) = self.lambda_u {
            s.lambda_u = d.into();
        }
        if let Some(a) = self.alpha {
            s.alpha = a;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn require_data(&self) -> CliResult<&DataPaths> {
        self.data.as_ref().ok_or_else(|| CliError::Config("missing `data` section".into()))
    }

    pub fn require_out(&self) -> CliResult<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Config("missing output directory (`out` or --out)".into()))
    }

    /// The scenario with size overrides and the master seed applied.
    pub fn scenario_config(&self) -> CliResult<ScenarioConfig> {
        let spec = self.scenario.as_ref().ok_or_else(|| CliError::Config("missing `scenario` section".into()))?;
        let base = ScenarioConfig::from_name(&spec.preset)?;
        let cfg = base.clone().with_sizes(
            spec.p.unwrap_or(base.p),
            spec.q.unwrap_or(base.q),
            spec.n.unwrap_or(base.n_labeled),
            spec.n_total.unwrap_or(base.n_total),
        );
        let cfg = cfg.with_seed(self.seed());
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn replicates(&self) -> CliResult<usize> {
        let r = self.replicates.unwrap_or(DEFAULT_REPLICATES);
        if r < 2 {
            return Err(CliError::Config(format!("replicates must be >= 2, got {r}")));
        }
        Ok(r)
    }

    pub fn target_kinds(&self) -> CliResult<Vec<XNewKind>> {
        match &self.targets {
            None => Ok(XNewKind::ALL.to_vec()),
            Some(labels) if labels.is_empty() => Err(CliError::Config("`targets` must not be empty".into())),
            Some(labels) => labels
                .iter()
                .map(|l| XNewKind::from_label(l).ok_or_else(|| CliError::Config(format!("unknown target kind `{l}`"))))
                .collect(),
        }
    }

    /// Worker count: explicit setting, then `SAS_WORKERS`, then the number of
    /// available cores.
    pub fn workers(&self) -> CliResult<usize> {
        let w = match self.workers {
            Some(w) => w,
            None => match std::env::var(WORKERS_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`")))?,
                Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
            },
        };
        if w == 0 {
            return Err(CliError::Config("worker count must be positive".into()));
        }
        Ok(w)
    }
}

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "SAS_WORKERS";
