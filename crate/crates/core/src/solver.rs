//! L1-penalized solvers.
//!
//! * [`fit_penalized_pl`] minimizes `(1/m) Σ {G(βᵀx_i) − y_i βᵀx_i} + λ Σ_{j∈mask} |β_j|`
//!   with accelerated proximal gradient (monotone variant, gradient-based
//!   momentum restart, backtracking on the Lipschitz estimate).
//! * [`fit_penalized_quadratic`] minimizes `½ uᵀĤu − uᵀb + λ‖u‖₁` by cyclic
//!   coordinate descent, where `Ĥ = (1/m) Σ w_i x_i x_iᵀ`.
//! * [`select_lambda_cv`] picks a penalty level by K-fold cross-validation of
//!   the held-out (unpenalized) pseudo-likelihood.
//!
//! Every returned fit carries a KKT residual recomputed from scratch at the
//! final coefficients.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;


use crate::error::{check_len, Error, Result};
use crate::glm::PseudoLikContext;
use crate::linalg::{self, dot, Matrix};
use crate::rng;

/// Proximal map of `t|·|`.
#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Penalty level plus the set of penalized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    lambda: f64,
    mask: Vec<bool>,
}

impl PenaltySpec {
    /// `lambda` may be `+∞`, which pins every penalized coordinate at zero.
    pub fn new(lambda: f64, mask: Vec<bool>) -> Result<Self> {
        if lambda.is_nan() || lambda < 0.0 {
            return Err(Error::Config(format!("penalty level must be >= 0, got {lambda}")));
        }
        Ok(PenaltySpec { lambda, mask })
    }

    /// Penalizes every coordinate except the leading intercept.
    pub fn intercept_free(lambda: f64, dim: usize) -> Result<Self> {
        let mut mask = vec![true; dim];
        if let Some(first) = mask.first_mut() {
            *first = false;
        }
        Self::new(lambda, mask)
    }

    /// Penalizes every coordinate.
    pub fn uniform(lambda: f64, dim: usize) -> Result<Self> {
        Self::new(lambda, vec![true; dim])
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(lambda, self.mask.clone())
    }

    /// `λ Σ_{j∈mask} |β_j|`; exact zeros contribute nothing even when `λ = ∞`.
    pub fn value(&self, coeffs: &[f64]) -> f64 {
        let mut total = 0.0;
        for (&b, &pen) in coeffs.iter().zip(&self.mask) {
            if pen && b != 0.0 {
                total += self.lambda * b.abs();
            }
        }
        total
    }
}

/// Options shared by every solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Target KKT residual.
    pub tolerance: f64,
    /// Iteration cap (proximal-gradient steps, or full coordinate sweeps).
    pub max_iterations: usize,
    pub warm_start: Option<Vec<f64>>,
    /// Record the penalized objective after every iteration.
    pub record_trace: bool,
    /// Power-iteration steps for the initial step size.
    pub power_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-6,
            max_iterations: 10_000,
            warm_start: None,
            record_trace: false,
            power_steps: 20,
        }
    }
}

impl SolverOptions {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_warm_start(mut self, start: Vec<f64>) -> Self {
        self.warm_start = Some(start);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("solver tolerance must be > 0, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Result of one penalized optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedFit {
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    /// Penalized objective at `coefficients`.
    pub objective_value: f64,
    /// Largest violation of the subgradient optimality conditions.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Penalized objective per iteration; empty unless requested.
    pub trace: Vec<f64>,
}

/// Largest violation of the KKT system for `gradient + λ ∂‖β_mask‖₁ ∋ 0`.
pub fn kkt_residual(gradient: &[f64], coeffs: &[f64], penalty: &PenaltySpec) -> f64 {
    let lam = penalty.lambda();
    let mut worst: f64 = 0.0;
    for ((&g, &b), &pen) in gradient.iter().zip(coeffs).zip(penalty.mask()) {
        let v = if !pen {
            g.abs()
        } else if b == 0.0 {
            (g.abs() - lam).max(0.0)
        } else {
            (g + lam * b.signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Penalized pseudo-likelihood objective at `coeffs`.
pub fn penalized_pl_objective(
    ctx: &PseudoLikContext<'_>,
    penalty: &PenaltySpec,
    coeffs: &[f64],
) -> Result<f64> {
    Ok(crate::glm::pl_objective(ctx, coeffs)? + penalty.value(coeffs))
}

/// Independent KKT recheck: recomputes the gradient at `coeffs`.
pub fn pl_kkt_residual(
    ctx: &PseudoLikContext<'_>,
    penalty: &PenaltySpec,
    coeffs: &[f64],
) -> Result<f64> {
    let grad = crate::glm::pl_gradient(ctx, coeffs)?;
    Ok(kkt_residual(&grad, coeffs, penalty))
}

const KKT_CHECK_EVERY: usize = 5;
/// Relative objective change below which function values are not trusted.
const FLAT_OBJECTIVE: f64 = 1e-11;

/// L1-penalized pseudo-likelihood fit by monotone accelerated proximal gradient.
///
/// Non-convergence within the iteration cap is reported through
/// `converged = false`, not as an error.
pub fn fit_penalized_pl(
    ctx: &PseudoLikContext<'_>,
    penalty: &PenaltySpec,
    opts: &SolverOptions,
) -> Result<PenalizedFit> {
    opts.validate()?;
    let p = ctx.dim();
    let m = ctx.len();
    check_len("penalty mask", p, penalty.mask().len())?;
    if m == 0 {
        return Err(Error::Domain("pseudo-likelihood fit needs at least one row".into()));
    }
    let lam = penalty.lambda();
    let mask = penalty.mask();

    // Null-model screening: λ at or above λ_max yields exact zeros.
    if opts.warm_start.is_none() && lam.is_finite() && mask.iter().any(|&pen| pen) {
        let null_opts = SolverOptions {
            record_trace: false,
            ..opts.clone()
        };
        let null = fit_null_model(ctx, mask, &null_opts)?;
        let grad = crate::glm::pl_gradient(ctx, &null.coefficients)?;
        if null.converged && grad.iter().zip(mask).all(|(g, &pen)| !pen || g.abs() <= lam) {
            let kkt = kkt_residual(&grad, &null.coefficients, penalty);
            let objective_value = penalized_pl_objective(ctx, penalty, &null.coefficients)?;
            let trace = if opts.record_trace { vec![objective_value] } else { Vec::new() };
            return Ok(PenalizedFit {
                coefficients: null.coefficients,
                lambda: lam,
                objective_value,
                kkt_residual: kkt,
                iterations: null.iterations,
                converged: kkt <= opts.tolerance,
                trace,
            });
        }
    }

    let mut x = match &opts.warm_start {
        Some(w) => {
            check_len("warm start", p, w.len())?;
            w.clone()
        }
        None => vec![0.0; p],
    };
    // Penalized coordinates of a warm start are meaningless when λ = ∞.
    if lam.is_infinite() {
        for (b, &pen) in x.iter_mut().zip(mask) {
            if pen {
                *b = 0.0;
            }
        }
    }
    let mut eta_x = vec![0.0; m];
    ctx.linear_predictors_into(&x, &mut eta_x);
    let mut obj_x = ctx.objective_at(&eta_x) + penalty.value(&x);
    if !obj_x.is_finite() {
        return Err(Error::Numerical("initial objective is not finite".into()));
    }

    let mut lip = ctx.link().derivative_bound()
        * linalg::gram_spectral_norm(ctx.design(), ctx.rows(), opts.power_steps);
    if !(lip > 1e-12) {
        lip = 1e-12;
    }

    let mut resid = vec![0.0; m];
    let mut grad = vec![0.0; p];
    let mut grad_z = vec![0.0; p];
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(obj_x);
    }

    ctx.gradient_at(&eta_x, &mut resid, &mut grad);
    let mut kkt = kkt_residual(&grad, &x, penalty);
    let mut converged = kkt <= opts.tolerance;
    let mut iterations = 0;

    let mut x_prev = x.clone();
    let mut eta_prev = eta_x.clone();
    let mut y = x.clone();
    let mut eta_y = eta_x.clone();
    let mut z = vec![0.0; p];
    let mut eta_z = vec![0.0; m];
    let mut t = 1.0;
    // `grad` currently holds the gradient at y (== x).
    let mut grad_at_y = true;
    let mut y_is_x = true;

    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        if !grad_at_y {
            ctx.gradient_at(&eta_y, &mut resid, &mut grad);
        }
        let f_y = ctx.objective_at(&eta_y);

        // Backtracking on the quadratic upper bound.
        let f_z = loop {
            let step = 1.0 / lip;
            let thr = lam * step;
            for j in 0..p {
                let v = y[j] - step * grad[j];
                z[j] = if mask[j] { soft_threshold(v, thr) } else { v };
            }
            ctx.linear_predictors_into(&z, &mut eta_z);
            let f_z = ctx.objective_at(&eta_z);
            let mut lin = 0.0;
            let mut sq = 0.0;
            for j in 0..p {
                let d = z[j] - y[j];
                lin += grad[j] * d;
                sq += d * d;
            }
            if sq == 0.0 {
                break f_z;
            }
            if (f_z - f_y).abs() > FLAT_OBJECTIVE * f_y.abs().max(1.0) {
                if f_z <= f_y + lin + 0.5 * lip * sq {
                    break f_z;
                }
            } else {
                // Objective differences are at rounding level: test the
                // curvature along the step through gradients instead.
                ctx.gradient_at(&eta_z, &mut resid, &mut grad_z);
                let mut curvature = 0.0;
                for j in 0..p {
                    curvature += (z[j] - y[j]) * (grad_z[j] - grad[j]);
                }
                if curvature <= lip * sq {
                    break f_z;
                }
            }
            if f_z.is_nan() {
                return Err(Error::Numerical("objective became NaN during line search".into()));
            }
            lip *= 2.0;
            if lip > 1e30 {
                return Err(Error::Numerical("step size collapsed in line search".into()));
            }
        };
        let obj_z = f_z + penalty.value(&z);
        if obj_z.is_nan() {
            return Err(Error::Numerical("penalized objective is NaN".into()));
        }

        // A plain proximal step from x always descends, so a tiny increase
        // there is rounding noise.
        let noise = FLAT_OBJECTIVE * obj_x.abs().max(1.0);
        if obj_z <= obj_x || (y_is_x && obj_z <= obj_x + noise) {
            // Gradient-based restart test: (y − z)·(z − x) > 0.
            let mut restart_score = 0.0;
            for j in 0..p {
                restart_score += (y[j] - z[j]) * (z[j] - x[j]);
            }
            core::mem::swap(&mut x_prev, &mut x);
            core::mem::swap(&mut eta_prev, &mut eta_x);
            core::mem::swap(&mut x, &mut z);
            core::mem::swap(&mut eta_x, &mut eta_z);
            obj_x = obj_z;
            if restart_score > 0.0 {
                t = 1.0;
                y.copy_from_slice(&x);
                eta_y.copy_from_slice(&eta_x);
                y_is_x = true;
            } else {
                y_is_x = false;
                let t_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
                let beta = (t - 1.0) / t_next;
                for j in 0..p {
                    y[j] = x[j] + beta * (x[j] - x_prev[j]);
                }
                for i in 0..m {
                    eta_y[i] = eta_x[i] + beta * (eta_x[i] - eta_prev[i]);
                }
                t = t_next;
            }
        } else {
            // Reject the step and restart momentum from the incumbent.
            if y_is_x {
                lip *= 2.0;
            }
            t = 1.0;
            y.copy_from_slice(&x);
            eta_y.copy_from_slice(&eta_x);
            x_prev.copy_from_slice(&x);
            eta_prev.copy_from_slice(&eta_x);
            y_is_x = true;
        }
        grad_at_y = false;
        if opts.record_trace {
            trace.push(obj_x);
        }

        if iterations % KKT_CHECK_EVERY == 0 || iterations == opts.max_iterations {
            ctx.gradient_at(&eta_x, &mut resid, &mut grad);
            kkt = kkt_residual(&grad, &x, penalty);
            converged = kkt <= opts.tolerance;
            if y_is_x {
                grad_at_y = true;
            }
        }
    }

    // Recompute everything from the coefficients alone.
    let grad = crate::glm::pl_gradient(ctx, &x)?;
    let kkt = kkt_residual(&grad, &x, penalty);
    let objective_value = penalized_pl_objective(ctx, penalty, &x)?;
    if !objective_value.is_finite() {
        return Err(Error::Numerical("final objective is not finite".into()));
    }
    Ok(PenalizedFit {
        coefficients: x,
        lambda: lam,
        objective_value,
        kkt_residual: kkt,
        iterations,
        converged: kkt <= opts.tolerance,
        trace,
    })
}

/// Fit with every penalized coordinate pinned at zero.
pub fn fit_null_model(
    ctx: &PseudoLikContext<'_>,
    mask: &[bool],
    opts: &SolverOptions,
) -> Result<PenalizedFit> {
    let penalty = PenaltySpec::new(f64::INFINITY, mask.to_vec())?;
    fit_penalized_pl(ctx, &penalty, opts)
}

/// Smallest λ at which every penalized coordinate is zero: the sup-norm of
/// the gradient over penalized coordinates at the null-model optimum.
pub fn lambda_max(ctx: &PseudoLikContext<'_>, mask: &[bool], opts: &SolverOptions) -> Result<f64> {
    let null = fit_null_model(ctx, mask, opts)?;
    let grad = crate::glm::pl_gradient(ctx, &null.coefficients)?;
    Ok(grad
        .iter()
        .zip(mask)
        .filter(|(_, &pen)| pen)
        .fold(0.0, |acc: f64, (g, _)| acc.max(g.abs())))
}

/// `len` log-spaced values from `lambda_max` down to `min_ratio · lambda_max`.
pub fn lambda_path(lambda_max: f64, len: usize, min_ratio: f64) -> Result<Vec<f64>> {
    if len == 0 || !(lambda_max > 0.0) || !(min_ratio > 0.0 && min_ratio <= 1.0) {
        return Err(Error::Config("lambda path needs len >= 1, lambda_max > 0, ratio in (0, 1]".into()));
    }
    if len == 1 {
        return Ok(vec![lambda_max]);
    }
    let lo = libm::log(min_ratio);
    Ok((0..len)
        .map(|k| lambda_max * libm::exp(lo * k as f64 / (len - 1) as f64))
        .collect())
}

/// `len` log-spaced values from `span · center` down to `center / span`.
pub fn anchored_grid(center: f64, len: usize, span: f64) -> Result<Vec<f64>> {
    if !(center > 0.0) || !(span >= 1.0) {
        return Err(Error::Config("anchored grid needs center > 0 and span >= 1".into()));
    }
    lambda_path(center * span, len, 1.0 / (span * span))
}

/// Cross-validation outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub chosen_lambda: f64,
    pub chosen_index: usize,
    pub grid: Vec<f64>,
    /// Mean held-out objective per grid value.
    pub mean_losses: Vec<f64>,
    /// `fold_losses[f][l]`: held-out objective of fold `f` at grid value `l`.
    pub fold_losses: Vec<Vec<f64>>,
}

/// Assigns each of `m` positions to one of `folds` groups of near-equal size.
pub fn cv_fold_assignment(m: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut stream = rng::stream(seed, "cv-folds", 0);
    let perm = rng::permutation(m, &mut stream);
    let mut assign = vec![0; m];
    for (pos, &i) in perm.iter().enumerate() {
        assign[i] = pos % folds;
    }
    assign
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("lambda grid is empty".into()));
    }
    if grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::Config("lambda grid values must be finite and >= 0".into()));
    }
    if grid.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Config("lambda grid must be sorted in descending order".into()));
    }
    Ok(())
}

/// Held-out losses of one CV fold along the whole grid, warm-started.
fn cv_fold_losses(
    ctx: &PseudoLikContext<'_>,
    mask: &[bool],
    grid: &[f64],
    assign: &[usize],
    fold: usize,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    let mut train_rows = Vec::new();
    let mut train_y = Vec::new();
    let mut test_rows = Vec::new();
    let mut test_y = Vec::new();
    let design_index = |k: usize| ctx.rows().map_or(k, |r| r[k]);
    for (k, &a) in assign.iter().enumerate() {
        if a == fold {
            test_rows.push(design_index(k));
            test_y.push(ctx.response()[k]);
        } else {
            train_rows.push(design_index(k));
            train_y.push(ctx.response()[k]);
        }
    }
    let train = PseudoLikContext::with_rows(ctx.design(), &train_rows, &train_y, ctx.link())?;
    let test = PseudoLikContext::with_rows(ctx.design(), &test_rows, &test_y, ctx.link())?;
    let mut warm: Option<Vec<f64>> = None;
    let mut losses = Vec::with_capacity(grid.len());
    for &lam in grid {
        let penalty = PenaltySpec::new(lam, mask.to_vec())?;
        let mut o = opts.clone();
        o.warm_start = warm.take();
        o.record_trace = false;
        let fit = fit_penalized_pl(&train, &penalty, &o)?;
        losses.push(crate::glm::pl_objective(&test, &fit.coefficients)?);
        warm = Some(fit.coefficients);
    }
    Ok(losses)
}

/// K-fold cross-validation over a descending λ grid.
///
/// The chosen λ minimizes the mean held-out unpenalized objective; ties go to
/// the larger λ. Per-fold losses are combined in fixed fold order.
pub fn select_lambda_cv(
    ctx: &PseudoLikContext<'_>,
    mask: &[bool],
    grid: &[f64],
    folds: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<CvResult> {
    validate_grid(grid)?;
    check_len("penalty mask", ctx.dim(), mask.len())?;
    let m = ctx.len();
    if folds < 2 || folds > m {
        return Err(Error::Config(format!("cv folds must lie in [2, {m}], got {folds}")));
    }
    let assign = cv_fold_assignment(m, folds, seed);
    let mut fold_losses = Vec::with_capacity(folds);
    for f in 0..folds {
        fold_losses.push(cv_fold_losses(ctx, mask, grid, &assign, f, opts)?);
    }
    let mut mean_losses = vec![0.0; grid.len()];
    for losses in &fold_losses {
        for (acc, l) in mean_losses.iter_mut().zip(losses) {
            *acc += l;
        }
    }
    for acc in mean_losses.iter_mut() {
        *acc /= folds as f64;
    }
    let mut chosen_index = 0;
    for (l, &loss) in mean_losses.iter().enumerate() {
        if loss < mean_losses[chosen_index] {
            chosen_index = l;
        }
    }
    if mean_losses.iter().any(|l| l.is_nan()) {
        return Err(Error::Numerical("cross-validation loss is NaN".into()));
    }
    Ok(CvResult {
        chosen_lambda: grid[chosen_index],
        chosen_index,
        grid: grid.to_vec(),
        mean_losses,
        fold_losses,
    })
}

/// Penalized quadratic projection program
/// `min_u ½ uᵀĤu − uᵀ target + λ_u ‖u‖₁`, `Ĥ = (1/m) Σ w_i x_i x_iᵀ`.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticProgramSpec<'a> {
    /// `g′(β̂ᵀx_i)` per addressed row.
    pub hessian_weights: &'a [f64],
    pub design: &'a Matrix,
    pub rows: Option<&'a [usize]>,
    pub target: &'a [f64],
    pub lambda_u: f64,
}

impl QuadraticProgramSpec<'_> {
    pub fn validate(&self) -> Result<()> {
        let m = linalg::subset_len(self.design, self.rows);
        check_len("hessian weights", m, self.hessian_weights.len())?;
        check_len("quadratic target", self.design.cols(), self.target.len())?;
        if m == 0 {
            return Err(Error::Domain("quadratic program needs at least one row".into()));
        }
        if self.hessian_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Domain("hessian weights must be finite and nonnegative".into()));
        }
        if !(self.lambda_u >= 0.0) || !self.lambda_u.is_finite() {
            return Err(Error::Config("lambda_u must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// `Ĥ = (1/m) Σ w_i x_i x_iᵀ`.
    pub fn hessian(&self) -> Result<Matrix> {
        let m = linalg::subset_len(self.design, self.rows);
        linalg::weighted_gram(self.design, self.rows, self.hessian_weights, 1.0 / m as f64)
    }
}

pub fn fit_penalized_quadratic(
    spec: &QuadraticProgramSpec<'_>,
    opts: &SolverOptions,
) -> Result<PenalizedFit> {
    spec.validate()?;
    let h = spec.hessian()?;
    fit_penalized_quadratic_gram(&h, spec.target, spec.lambda_u, opts)
}

/// `½ uᵀHu − uᵀb + λ‖u‖₁`.
pub fn quadratic_objective(h: &Matrix, target: &[f64], lambda: f64, u: &[f64]) -> f64 {
    let hu = h.mul_vec(u).expect("dimension checked by caller");
    0.5 * dot(u, &hu) - dot(u, target) + lambda * linalg::norm1(u)
}

/// KKT residual of the quadratic program, recomputed from `u`.
pub fn quadratic_kkt_residual(h: &Matrix, target: &[f64], lambda: f64, u: &[f64]) -> Result<f64> {
    check_len("quadratic kkt", h.cols(), u.len())?;
    let hu = h.mul_vec(u)?;
    let grad: Vec<f64> = hu.iter().zip(target).map(|(a, b)| a - b).collect();
    let penalty = PenaltySpec::uniform(lambda, u.len())?;
    Ok(kkt_residual(&grad, u, &penalty))
}

/// Coordinate descent on a precomputed symmetric positive semidefinite `H`.
pub fn fit_penalized_quadratic_gram(
    h: &Matrix,
    target: &[f64],
    lambda: f64,
    opts: &SolverOptions,
) -> Result<PenalizedFit> {
    opts.validate()?;
    let p = h.rows();
    check_len("quadratic hessian", p, h.cols())?;
    check_len("quadratic target", p, target.len())?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Config("lambda_u must be finite and >= 0".into()));
    }
    let mut u = match &opts.warm_start {
        Some(w) => {
            check_len("warm start", p, w.len())?;
            w.clone()
        }
        None => vec![0.0; p],
    };
    let mut hu = h.mul_vec(&u)?;
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(quadratic_objective(h, target, lambda, &u));
    }
    let penalty = PenaltySpec::uniform(lambda, p)?;
    let mut sweeps = 0;
    let mut converged = false;
    let mut grad = vec![0.0; p];
    while sweeps < opts.max_iterations {
        sweeps += 1;
        for j in 0..p {
            let hjj = h.get(j, j);
            let partial = target[j] - (hu[j] - hjj * u[j]);
            let new = if hjj > 0.0 {
                soft_threshold(partial, lambda) / hjj
            } else if partial.abs() > lambda {
                return Err(Error::Numerical(format!(
                    "quadratic program is unbounded along coordinate {j}"
                )));
            } else {
                0.0
            };
            let delta = new - u[j];
            if delta != 0.0 {
                linalg::axpy(delta, h.row(j), &mut hu);
                u[j] = new;
            }
        }
        if opts.record_trace {
            trace.push(quadratic_objective(h, target, lambda, &u));
        }
        for j in 0..p {
            grad[j] = hu[j] - target[j];
        }
        if kkt_residual(&grad, &u, &penalty) <= opts.tolerance {
            // Confirm against a fresh product before stopping.
            hu = h.mul_vec(&u)?;
            for j in 0..p {
                grad[j] = hu[j] - target[j];
            }
            if kkt_residual(&grad, &u, &penalty) <= opts.tolerance {
                converged = true;
                break;
            }
        }
        if sweeps % 50 == 0 {
            hu = h.mul_vec(&u)?;
        }
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("quadratic solution is not finite".into()));
    }
    let kkt = quadratic_kkt_residual(h, target, lambda, &u)?;
    Ok(PenalizedFit {
        objective_value: quadratic_objective(h, target, lambda, &u),
        coefficients: u,
        lambda,
        kkt_residual: kkt,
        iterations: sweeps,
        converged: converged && kkt <= opts.tolerance,
        trace,
    })
}
