//! Simulation designs with zero-inflated discrete covariates.
//!
//! Every latent variable is `N(0, 25)`. Covariates are built through
//! `ς(z) = ⌊log(1 + eᶻ)⌋` and standardized with fixed constants.
//!
//! * Scenario I: `Y` follows a probit model in the latent `Z^x`; the leading
//!   surrogate mixes a noisy function of `Y` with a linear term in `X`.
//!   Neither working model is correct.
//! * Scenario II: the leading surrogate is a noisy function of the latents,
//!   and `Y` depends on everything only through it, so the logistic
//!   imputation model is correct with a single active surrogate.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::glm::{expit, normal_cdf, softplus, Link, PseudoLikContext};
use crate::linalg::{self, dot, Matrix};
use crate::rng::{self, StreamRng};
use crate::sas::SemiSupervisedData;
use crate::solver::{self, PenaltySpec, SolverOptions};

/// Centering constant for `ς`-transformed covariates.
pub const COVARIATE_CENTER: f64 = 1.80;
/// Scaling constant for `ς`-transformed covariates.
pub const COVARIATE_SCALE: f64 = 2.74;
const LATENT_SD: f64 = 5.0;

/// `⌊log(1 + eᶻ)⌋`.
pub fn varsigma(z: f64) -> f64 {
    libm::floor(softplus(z))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Both working models misspecified.
    I,
    /// Correct, one-surrogate imputation model.
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlphaPattern {
    /// Three nonzero latent effects.
    Sparse,
    /// All latent effects nonzero, in three tiers.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurrogateStrength {
    Moderate,
    Strong,
}

/// Kind of prediction target `x_new`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum XNewKind {
    /// `(1, 1, 0, …)`.
    Sparse,
    /// `(1, 0.183 × 30, 0, …)`.
    Intermediate,
    /// `(1, 0.045 × p)`.
    Dense,
    /// Drawn covariate row with predicted risk near 0.2.
    Low,
    /// Near 0.5.
    Medium,
    /// Near 0.7.
    High,
}

impl XNewKind {
    pub const ALL: [XNewKind; 6] = [
        XNewKind::Sparse,
        XNewKind::Intermediate,
        XNewKind::Dense,
        XNewKind::Low,
        XNewKind::Medium,
        XNewKind::High,
    ];

    pub fn label(self) -> &'static str {
        match self {
            XNewKind::Sparse => "S",
            XNewKind::Intermediate => "I",
            XNewKind::Dense => "D",
            XNewKind::Low => "L",
            XNewKind::Medium => "M",
            XNewKind::High => "H",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        XNewKind::ALL.into_iter().find(|k| k.label() == label)
    }

    /// Target risk for drawn kinds.
    pub fn target_risk(self) -> Option<f64> {
        match self {
            XNewKind::Low => Some(0.2),
            XNewKind::Medium => Some(0.5),
            XNewKind::High => Some(0.7),
            _ => None,
        }
    }
}

/// Sizes, preset and seed of one simulated data set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub alpha_pattern: AlphaPattern,
    pub strength: SurrogateStrength,
    /// Covariates `p`, intercept excluded.
    pub p: usize,
    /// Surrogates `q`.
    pub q: usize,
    /// Labeled rows `n`.
    pub n_labeled: usize,
    /// All rows `N`.
    pub n_total: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Preset with `p = 500`, `q = 100`, `n = 500`, `N = 20000`.
    pub fn preset(scenario: Scenario, alpha_pattern: AlphaPattern, strength: SurrogateStrength) -> Self {
        ScenarioConfig {
            scenario,
            alpha_pattern,
            strength,
            p: 500,
            q: 100,
            n_labeled: 500,
            n_total: 20_000,
            seed: 0,
        }
    }

    /// Parses names such as `I-sparse-strong` or `II-dense-moderate`.
    pub fn from_name(name: &str) -> Result<Self> {
        let parts: Vec<&str> = name.split('-').collect();
        let bad = || Error::Config(format!("unknown scenario preset {name:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let scenario = match parts[0] {
            "I" => Scenario::I,
            "II" => Scenario::II,
            _ => return Err(bad()),
        };
        let pattern = match parts[1] {
            "sparse" => AlphaPattern::Sparse,
            "dense" => AlphaPattern::Dense,
            _ => return Err(bad()),
        };
        let strength = match parts[2] {
            "moderate" => SurrogateStrength::Moderate,
            "strong" => SurrogateStrength::Strong,
            _ => return Err(bad()),
        };
        Ok(Self::preset(scenario, pattern, strength))
    }

    pub fn name(&self) -> String {
        let s = match self.scenario {
            Scenario::I => "I",
            Scenario::II => "II",
        };
        let a = match self.alpha_pattern {
            AlphaPattern::Sparse => "sparse",
            AlphaPattern::Dense => "dense",
        };
        let t = match self.strength {
            SurrogateStrength::Moderate => "moderate",
            SurrogateStrength::Strong => "strong",
        };
        format!("{s}-{a}-{t}")
    }

    pub fn with_sizes(mut self, p: usize, q: usize, n_labeled: usize, n_total: usize) -> Self {
        self.p = p;
        self.q = q;
        self.n_labeled = n_labeled;
        self.n_total = n_total;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 31 {
            return Err(Error::Config(format!("simulation needs p >= 31, got {}", self.p)));
        }
        if self.q < 1 {
            return Err(Error::Config("simulation needs q >= 1".into()));
        }
        if self.n_labeled < 1 || self.n_total <= self.n_labeled {
            return Err(Error::Config(format!(
                "simulation needs 1 <= n < N, got n = {}, N = {}",
                self.n_labeled, self.n_total
            )));
        }
        Ok(())
    }

    /// Last index (1-based, intercept excluded) of the second covariate
    /// group in the oracle model.
    pub fn group_boundary(&self) -> usize {
        match self.alpha_pattern {
            AlphaPattern::Sparse => 3,
            AlphaPattern::Dense => 30,
        }
    }

    pub fn params(&self) -> ScenarioParams {
        ScenarioParams::for_config(self)
    }
}

/// `(head, second × 2 or 29, tail × rest)` over `p` coordinates.
fn tiered(pattern: AlphaPattern, p: usize, head: f64, second: f64, tail: f64) -> Vec<f64> {
    let second_len = match pattern {
        AlphaPattern::Sparse => 2,
        AlphaPattern::Dense => 29,
    };
    let mut v = vec![tail; p];
    v[0] = head;
    for c in v.iter_mut().skip(1).take(second_len) {
        *c = second;
    }
    v
}

/// Numerical parameters of a design. Fields are public so tests can vary a
/// single one.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub scenario: Scenario,
    /// Latent effects, length `p`.
    pub alpha: Vec<f64>,
    /// Surrogate strength: effect of `Y` on `S₁` (I) or of `S₁` on `Y` (II).
    pub theta: f64,
    /// Scale of the surrogate noise (II only).
    pub nu: f64,
    /// Linear covariate term of `S₁`, length `p` (I only).
    pub xi: Vec<f64>,
    pub mu_s: f64,
    pub sigma_s: f64,
}

impl ScenarioParams {
    pub fn for_config(cfg: &ScenarioConfig) -> Self {
        use AlphaPattern::{Dense, Sparse};
        use SurrogateStrength::{Moderate, Strong};
        let p = cfg.p;
        let pat = cfg.alpha_pattern;
        match cfg.scenario {
            Scenario::I => {
                let (alpha, mu_s, sigma_s) = match pat {
                    Sparse => (tiered(pat, p, 0.45, 0.318, 0.0), 1.82, 2.01),
                    Dense => (tiered(pat, p, 0.316, 0.059, 0.007), 2.71, 2.68),
                };
                let theta = match cfg.strength {
                    Moderate => 0.6,
                    Strong => 1.0,
                };
                let xi = match (pat, cfg.strength) {
                    (Sparse, Moderate) => tiered(pat, p, 0.407, 0.330, 0.005),
                    (Sparse, Strong) => tiered(pat, p, 0.199, 0.163, 0.002),
                    (Dense, Moderate) => tiered(pat, p, 0.350, 0.064, 0.011),
                    (Dense, Strong) => tiered(pat, p, 0.169, 0.032, 0.005),
                };
                ScenarioParams {
                    scenario: Scenario::I,
                    alpha,
                    theta,
                    nu: 0.0,
                    xi,
                    mu_s,
                    sigma_s,
                }
            }
            Scenario::II => {
                let alpha = match pat {
                    Sparse => tiered(pat, p, 0.3, 0.212, 0.0),
                    Dense => tiered(pat, p, 0.211, 0.039, 0.004),
                };
                let (nu, theta) = match cfg.strength {
                    Moderate => (0.4, 2.0),
                    Strong => (0.6, 3.7),
                };
                ScenarioParams {
                    scenario: Scenario::II,
                    alpha,
                    theta,
                    nu,
                    xi: vec![0.0; p],
                    mu_s: 0.66,
                    sigma_s: 1.0,
                }
            }
        }
    }
}

/// Latent quantities kept for evaluation only.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRecord {
    /// Outcome of every stacked row, including unlabeled ones.
    pub y_all: Vec<f64>,
    /// The part of `S₁` that does not depend on `X` linearly (I: the
    /// standardized `ς(Z^s₁/2 + θY)` term; II: `S₁` itself).
    pub s1_signal: Vec<f64>,
}

/// Simulated semi-supervised data plus its latent truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub data: SemiSupervisedData,
    pub truth: TruthRecord,
}

#[inline]
fn latent(rng: &mut StreamRng) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    LATENT_SD * z
}

#[inline]
fn standardized(z: f64) -> f64 {
    (varsigma(z) - COVARIATE_CENTER) / COVARIATE_SCALE
}

/// One draw of `(X, S, Y)`.
struct RowDraw {
    y: f64,
    s1_signal: f64,
}

/// Scratch space for row generation.
struct RowGenerator<'a> {
    params: &'a ScenarioParams,
    /// `Z^x_j √(1−1/p) + Z^u/√p`.
    mixed: Vec<f64>,
    zx: Vec<f64>,
}

impl<'a> RowGenerator<'a> {
    fn new(params: &'a ScenarioParams) -> Self {
        let p = params.alpha.len();
        RowGenerator {
            params,
            mixed: vec![0.0; p],
            zx: vec![0.0; p],
        }
    }

    /// Fills `x` (length `p`, no intercept) and, when given, `s` (length
    /// `q`). Without `s` only the surrogate noise needed for `Y` is drawn.
    fn draw(&mut self, rng: &mut StreamRng, x: &mut [f64], s: Option<&mut [f64]>) -> RowDraw {
        let prm = self.params;
        let p = x.len();
        let pf = p as f64;
        for z in self.zx.iter_mut() {
            *z = latent(rng);
        }
        let zu = latent(rng);
        let a = libm::sqrt(1.0 - 1.0 / pf);
        let b = 1.0 / libm::sqrt(pf);
        for (m, &z) in self.mixed.iter_mut().zip(&self.zx) {
            *m = z * a + zu * b;
        }
        let mut tail = 0.0;
        for j in 1..p {
            x[j] = standardized(self.mixed[j]);
            tail += x[j];
        }
        x[0] = standardized(2.0 * tail / libm::sqrt(pf - 1.0) + self.zx[0] / core::f64::consts::SQRT_2);

        match prm.scenario {
            Scenario::I => {
                let prob = normal_cdf(dot(&prm.alpha, &self.zx));
                let y = (rng.random::<f64>() < prob) as u8 as f64;
                let zs1 = latent(rng);
                let s1_signal = (varsigma(zs1 / 2.0 + prm.theta * y) - prm.mu_s) / prm.sigma_s;
                if let Some(s) = s {
                    s[0] = s1_signal + dot(&prm.xi, x);
                    for v in s.iter_mut().skip(1) {
                        *v = standardized(latent(rng));
                    }
                }
                RowDraw { y, s1_signal }
            }
            Scenario::II => {
                let zs1 = latent(rng);
                let s1 = (varsigma(prm.nu * zs1 + dot(&prm.alpha, &self.mixed)) - prm.mu_s) / prm.sigma_s;
                let y = (rng.random::<f64>() < expit(prm.theta * s1)) as u8 as f64;
                if let Some(s) = s {
                    s[0] = s1;
                    for v in s.iter_mut().skip(1) {
                        *v = standardized(latent(rng));
                    }
                }
                RowDraw { y, s1_signal: s1 }
            }
        }
    }
}

/// Draws `rows` complete rows: covariates with intercept, surrogates,
/// outcomes and the latent surrogate signal.
fn draw_rows(
    params: &ScenarioParams,
    q: usize,
    rows: usize,
    rng: &mut StreamRng,
) -> (Matrix, Matrix, Vec<f64>, Vec<f64>) {
    let p = params.alpha.len();
    let mut gen = RowGenerator::new(params);
    let mut x = Matrix::zeros(rows, p + 1);
    let mut s = Matrix::zeros(rows, q);
    let mut y = Vec::with_capacity(rows);
    let mut sig = Vec::with_capacity(rows);
    for i in 0..rows {
        let xr = x.row_mut(i);
        xr[0] = 1.0;
        let draw = gen.draw(rng, &mut xr[1..], Some(s.row_mut(i)));
        y.push(draw.y);
        sig.push(draw.s1_signal);
    }
    (x, s, y, sig)
}

fn check_params(cfg: &ScenarioConfig, params: &ScenarioParams) -> Result<()> {
    cfg.validate()?;
    if params.scenario != cfg.scenario {
        return Err(Error::Config("parameters belong to a different scenario".into()));
    }
    if params.alpha.len() != cfg.p || params.xi.len() != cfg.p {
        return Err(Error::Config("alpha and xi must have length p".into()));
    }
    if !(params.sigma_s > 0.0) {
        return Err(Error::Config("sigma_s must be > 0".into()));
    }
    Ok(())
}

/// Simulated data set with explicit parameters.
pub fn generate_with_params(cfg: &ScenarioConfig, params: &ScenarioParams) -> Result<SimulatedData> {
    check_params(cfg, params)?;
    let mut rng = rng::stream(cfg.seed, "scenario-data", 0);
    let (x, s, y_all, s1_signal) = draw_rows(params, cfg.q, cfg.n_total, &mut rng);
    let n = cfg.n_labeled;
    let data = SemiSupervisedData::new(
        x.slice_rows(0, n),
        s.slice_rows(0, n),
        y_all[..n].to_vec(),
        x.slice_rows(n, cfg.n_total),
        s.slice_rows(n, cfg.n_total),
    )?;
    Ok(SimulatedData {
        data,
        truth: TruthRecord { y_all, s1_signal },
    })
}

/// Scenario I data set.
pub fn generate_scenario_i(cfg: &ScenarioConfig) -> Result<SimulatedData> {
    if cfg.scenario != Scenario::I {
        return Err(Error::Config("generate_scenario_i needs a Scenario I configuration".into()));
    }
    generate_with_params(cfg, &cfg.params())
}

/// Scenario II data set.
pub fn generate_scenario_ii(cfg: &ScenarioConfig) -> Result<SimulatedData> {
    if cfg.scenario != Scenario::II {
        return Err(Error::Config("generate_scenario_ii needs a Scenario II configuration".into()));
    }
    generate_with_params(cfg, &cfg.params())
}

/// Either scenario, by configuration.
pub fn generate(cfg: &ScenarioConfig) -> Result<SimulatedData> {
    generate_with_params(cfg, &cfg.params())
}

/// Independent labeled test rows `(X with intercept, Y)` from the same law.
pub fn generate_test_set(cfg: &ScenarioConfig, rows: usize) -> Result<(Matrix, Vec<f64>)> {
    let params = cfg.params();
    check_params(cfg, &params)?;
    let mut rng = rng::stream(cfg.seed, "scenario-test", 0);
    let (x, _, y, _) = draw_rows(&params, cfg.q, rows, &mut rng);
    Ok((x, y))
}

/// Population logistic working-model coefficient, evaluated numerically.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleBeta {
    /// Length `p + 1`, intercept first.
    pub beta0: Vec<f64>,
    /// `(η₀, η₁, η₂, η₃)`: intercept, first covariate, per-coordinate effect
    /// of the second group, per-coordinate effect of the rest.
    pub eta: [f64; 4],
    pub evaluation_sample_size: usize,
    pub group_boundary: usize,
}

/// Fits the four-parameter exchangeable logistic model
/// `η₀ + η₁X₁ + η₂ Σ_{j=2}^{s} X_j + η₃ Σ_{j>s} X_j` on `eval_n` fresh draws
/// and expands it to a `p + 1` vector.
pub fn evaluate_oracle_beta(cfg: &ScenarioConfig, eval_n: usize) -> Result<OracleBeta> {
    cfg.validate()?;
    if eval_n < 1000 {
        return Err(Error::Config(format!("oracle evaluation needs eval_n >= 1000, got {eval_n}")));
    }
    let params = cfg.params();
    let p = cfg.p;
    let s = cfg.group_boundary();
    let g2 = (s - 1) as f64;
    let g3 = (p - s) as f64;
    let mut rng = rng::stream(cfg.seed, "oracle-beta", 0);
    let mut gen = RowGenerator::new(&params);
    let mut x = vec![0.0; p];
    let mut design = Matrix::zeros(eval_n, 4);
    let mut y = Vec::with_capacity(eval_n);
    for i in 0..eval_n {
        let draw = gen.draw(&mut rng, &mut x, None);
        let second: f64 = x[1..s].iter().sum();
        let rest: f64 = x[s..].iter().sum();
        // Group sums are divided by √size for conditioning.
        let r = design.row_mut(i);
        r[0] = 1.0;
        r[1] = x[0];
        r[2] = second / libm::sqrt(g2);
        r[3] = rest / libm::sqrt(g3);
        y.push(draw.y);
    }
    let ctx = PseudoLikContext::new(&design, &y, Link::Logit)?;
    let penalty = PenaltySpec::uniform(0.0, 4)?;
    let opts = SolverOptions {
        tolerance: 1e-8,
        max_iterations: 100_000,
        ..SolverOptions::default()
    };
    let fit = solver::fit_penalized_pl(&ctx, &penalty, &opts)?;
    if !fit.converged {
        return Err(Error::Numerical(format!(
            "oracle coefficient fit did not converge (KKT residual {:.3e})",
            fit.kkt_residual
        )));
    }
    let c = &fit.coefficients;
    let eta = [c[0], c[1], c[2] / libm::sqrt(g2), c[3] / libm::sqrt(g3)];
    let mut beta0 = vec![0.0; p + 1];
    beta0[0] = eta[0];
    beta0[1] = eta[1];
    for (j, b) in beta0.iter_mut().enumerate().skip(2) {
        *b = if j <= s { eta[2] } else { eta[3] };
    }
    Ok(OracleBeta {
        beta0,
        eta,
        evaluation_sample_size: eval_n,
        group_boundary: s,
    })
}

/// Band half-width for drawn prediction targets.
pub const XNEW_RISK_BAND: f64 = 0.02;
/// Candidate cap for drawn prediction targets.
pub const XNEW_MAX_CANDIDATES: usize = 1_000_000;

/// Prediction target of a given kind, length `p + 1` with leading 1.
pub fn make_xnew(kind: XNewKind, cfg: &ScenarioConfig, oracle: Option<&OracleBeta>, seed: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    let p = cfg.p;
    let mut x = vec![0.0; p + 1];
    x[0] = 1.0;
    match kind {
        XNewKind::Sparse => x[1] = 1.0,
        XNewKind::Intermediate => {
            for v in x.iter_mut().skip(1).take(30) {
                *v = 0.183;
            }
        }
        XNewKind::Dense => {
            for v in x.iter_mut().skip(1) {
                *v = 0.045;
            }
        }
        XNewKind::Low | XNewKind::Medium | XNewKind::High => {
            let oracle = oracle.ok_or_else(|| Error::Config("drawn x_new kinds need the oracle coefficient".into()))?;
            if oracle.beta0.len() != p + 1 {
                return Err(Error::Config("oracle coefficient has the wrong length".into()));
            }
            let target = kind.target_risk().unwrap_or(0.5);
            let params = cfg.params();
            let mut gen = RowGenerator::new(&params);
            let mut rng = rng::stream(seed, "xnew", kind as u64);
            for _ in 0..XNEW_MAX_CANDIDATES {
                gen.draw(&mut rng, &mut x[1..], None);
                if (expit(dot(&oracle.beta0, &x)) - target).abs() <= XNEW_RISK_BAND {
                    return Ok(x);
                }
            }
            return Err(Error::Numerical(format!(
                "no covariate row with risk within {XNEW_RISK_BAND} of {target} in {XNEW_MAX_CANDIDATES} draws"
            )));
        }
    }
    Ok(x)
}

/// `‖b‖₁² / ‖b‖₂²`.
pub fn approx_sparsity(b: &[f64]) -> Result<f64> {
    let sq = dot(b, b);
    if sq == 0.0 || !sq.is_finite() {
        return Err(Error::Domain("approximate sparsity needs a finite nonzero vector".into()));
    }
    let l1 = linalg::norm1(b);
    Ok(l1 * l1 / sq)
}
