//! End-to-end estimation: penalty selection, the two-step fit, cross-fitting
//! and per-target inference.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::glm::{Link, PseudoLikContext};
use crate::linalg::dot;
use crate::rng;
use crate::sas::{
    self, CrossFitBundle, DebiasedComponents, NuisanceLambdas, PredictionInterval, Projection,
    SemiSupervisedData, WarmStarts,
};
use crate::solver::{self, CvResult, PenalizedFit, SolverOptions};

/// How a penalty level is chosen. Rates are
/// `√(log(p+q)/n)` for the imputation model and `√(log p/N)` for the
/// prediction model and the projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    Fixed(f64),
    /// `multiplier × rate`.
    Rate(f64),
    /// Cross-validation over `grid_len` log-spaced values between
    /// `rate / span` and `rate × span`.
    Cv { grid_len: usize, span: f64, folds: usize },
}

impl LambdaRule {
    fn validate(&self, what: &str) -> Result<()> {
        let ok = match *self {
            LambdaRule::Fixed(l) => l.is_finite() && l >= 0.0,
            LambdaRule::Rate(c) => c.is_finite() && c >= 0.0,
            LambdaRule::Cv { grid_len, span, folds } => grid_len >= 1 && span >= 1.0 && span.is_finite() && folds >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid penalty rule for {what}: {self:?}")))
        }
    }
}

/// Settings of a full fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SasSettings {
    pub link: Link,
    /// Cross-fitting folds `K ≥ 3`.
    pub folds: usize,
    pub lambda_gamma: LambdaRule,
    pub lambda_beta: LambdaRule,
    /// `Fixed` or `Rate` only.
    pub lambda_u: LambdaRule,
    /// Interval level is `1 − alpha`.
    pub alpha: f64,
    pub solver: SolverOptions,
    pub seed: u64,
}

impl Default for SasSettings {
    fn default() -> Self {
        SasSettings {
            link: Link::Logit,
            folds: 5,
            lambda_gamma: LambdaRule::Cv { grid_len: 10, span: 10.0, folds: 5 },
            lambda_beta: LambdaRule::Cv { grid_len: 10, span: 10.0, folds: 5 },
            lambda_u: LambdaRule::Rate(0.5),
            alpha: 0.05,
            solver: SolverOptions::default(),
            seed: 0,
        }
    }
}

impl SasSettings {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 3 {
            return Err(Error::Config(format!("cross-fitting needs K >= 3 folds, got {}", self.folds)));
        }
        self.lambda_gamma.validate("lambda_gamma")?;
        self.lambda_beta.validate("lambda_beta")?;
        self.lambda_u.validate("lambda_u")?;
        if matches!(self.lambda_u, LambdaRule::Cv { .. }) {
            return Err(Error::Config("lambda_u supports fixed values and rate multipliers only".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

fn log_dim(d: usize) -> f64 {
    libm::log(d.max(2) as f64)
}

/// `√(log(p+q)/n)`.
pub fn imputation_rate(data: &SemiSupervisedData) -> f64 {
    libm::sqrt(log_dim(data.n_covariates() + data.n_surrogates()) / data.n_labeled() as f64)
}

/// `√(log p/N)`.
pub fn target_rate(data: &SemiSupervisedData) -> f64 {
    libm::sqrt(log_dim(data.n_covariates()) / data.n_total() as f64)
}

/// Resolved penalty level with its cross-validation trace, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedLambda {
    pub value: f64,
    pub cv: Option<CvResult>,
}

fn resolve(
    rule: LambdaRule,
    rate: f64,
    ctx: &PseudoLikContext<'_>,
    seed: u64,
    opts: &SolverOptions,
) -> Result<SelectedLambda> {
    match rule {
        LambdaRule::Fixed(v) => Ok(SelectedLambda { value: v, cv: None }),
        LambdaRule::Rate(c) => Ok(SelectedLambda { value: c * rate, cv: None }),
        LambdaRule::Cv { grid_len, span, folds } => {
            let grid = solver::anchored_grid(rate, grid_len, span)?;
            let mut mask = alloc::vec![true; ctx.dim()];
            mask[0] = false;
            let cv = solver::select_lambda_cv(ctx, &mask, &grid, folds.min(ctx.len()), seed, opts)?;
            Ok(SelectedLambda { value: cv.chosen_lambda, cv: Some(cv) })
        }
    }
}

/// Selects the imputation penalty on the labeled rows.
pub fn select_lambda_gamma(data: &SemiSupervisedData, settings: &SasSettings) -> Result<SelectedLambda> {
    let rows: Vec<usize> = (0..data.n_labeled()).collect();
    let ctx = PseudoLikContext::with_rows(data.w(), &rows, data.y(), settings.link)?;
    resolve(
        settings.lambda_gamma,
        imputation_rate(data),
        &ctx,
        rng::derive_seed(settings.seed, "cv-gamma", 0),
        &settings.solver,
    )
}

/// Selects the prediction-model penalty on the stacked response.
pub fn select_lambda_beta(
    data: &SemiSupervisedData,
    gamma: Option<&[f64]>,
    settings: &SasSettings,
) -> Result<SelectedLambda> {
    let mut response = data.y().to_vec();
    if !data.is_supervised() {
        let gamma = gamma.ok_or_else(|| Error::Domain("unlabeled rows need imputation coefficients".into()))?;
        response.extend(sas::impute_outcomes(gamma, data, settings.link)?);
    }
    let ctx = PseudoLikContext::new(data.x(), &response, settings.link)?;
    resolve(
        settings.lambda_beta,
        target_rate(data),
        &ctx,
        rng::derive_seed(settings.seed, "cv-beta", 0),
        &settings.solver,
    )
}

/// Full-data fits, selected penalties and the cross-fitted bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct SasFit {
    pub link: Link,
    /// `None` for supervised data.
    pub gamma: Option<PenalizedFit>,
    pub beta: PenalizedFit,
    pub lambda_gamma: Option<SelectedLambda>,
    pub lambda_beta: SelectedLambda,
    pub lambda_u: f64,
    pub alpha: f64,
    pub n_labeled: usize,
    pub bundle: CrossFitBundle,
}

/// Inference for one prediction target.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub projection: Projection,
    pub components: DebiasedComponents,
    pub interval: PredictionInterval,
    /// `x_newᵀβ̂` from the full-data fit.
    pub plug_in_linear: f64,
}

/// Runs the two-step fit and the cross-fitting. Supervised data (no
/// unlabeled rows) skips the imputation model and yields the supervised
/// lasso with its debiasing machinery.
pub fn fit_sas(data: &SemiSupervisedData, settings: &SasSettings) -> Result<SasFit> {
    settings.validate()?;
    let opts = &settings.solver;
    let (gamma, lambda_gamma) = if data.is_supervised() {
        (None, None)
    } else {
        let sel = select_lambda_gamma(data, settings)?;
        let fit = sas::fit_imputation(data, settings.link, sel.value, opts)?;
        (Some(fit), Some(sel))
    };
    let gamma_coef = gamma.as_ref().map(|g| g.coefficients.as_slice());
    let lambda_beta = select_lambda_beta(data, gamma_coef, settings)?;
    let beta = match gamma_coef {
        Some(g) => sas::fit_target(data, g, settings.link, lambda_beta.value, opts)?,
        None => {
            let ctx = PseudoLikContext::new(data.x(), data.y(), settings.link)?;
            let penalty = solver::PenaltySpec::intercept_free(lambda_beta.value, data.x().cols())?;
            solver::fit_penalized_pl(&ctx, &penalty, opts)?
        }
    };
    let lambda_u = match settings.lambda_u {
        LambdaRule::Fixed(v) => v,
        LambdaRule::Rate(c) => c * target_rate(data),
        LambdaRule::Cv { .. } => unreachable!("rejected by validate"),
    };
    let partition = sas::make_folds(data, settings.folds, rng::derive_seed(settings.seed, "crossfit-folds", 0))?;
    let warm = WarmStarts {
        gamma: gamma.as_ref().map(|g| g.coefficients.clone()),
        beta: Some(beta.coefficients.clone()),
    };
    let lambdas = NuisanceLambdas {
        gamma: lambda_gamma.as_ref().map_or(0.0, |l| l.value),
        beta: lambda_beta.value,
    };
    let bundle = sas::fit_crossfit_bundle_with_partition(data, settings.link, partition, lambdas, &warm, opts)?;
    Ok(SasFit {
        link: settings.link,
        gamma,
        beta,
        lambda_gamma,
        lambda_beta,
        lambda_u,
        alpha: settings.alpha,
        n_labeled: data.n_labeled(),
        bundle,
    })
}

impl SasFit {
    /// Debiased estimate, variance and interval for `x_new` (length `p + 1`,
    /// intercept entry first).
    pub fn infer(&self, data: &SemiSupervisedData, x_new: &[f64], opts: &SolverOptions) -> Result<Inference> {
        let projection = sas::fit_projection(&self.bundle, x_new, self.lambda_u, opts)?;
        let components = sas::debiased_estimate(&self.bundle, &projection, data)?;
        let v_hat = sas::variance_estimate(&self.bundle, &projection, data)?;
        let interval =
            sas::confidence_interval(components.theta_hat, v_hat, x_new, data.n_labeled(), self.alpha, self.link)?;
        Ok(Inference {
            plug_in_linear: dot(x_new, &self.beta.coefficients),
            projection,
            components,
            interval,
        })
    }
}
