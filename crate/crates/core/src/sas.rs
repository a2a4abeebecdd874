//! Two-step surrogate-assisted estimation and cross-fitted inference.
//!
//! Estimation: an imputation model for `E(Y | X, S)` is fitted on the labeled
//! rows, its predictions replace the missing outcomes, and the prediction
//! model of `Y` on `X` is fitted over every row.
//!
//! Inference for a linear prediction `x_newᵀβ`: the folds are cross-fitted,
//! a projection direction `û` is estimated per fold from a penalized
//! quadratic program, and the plug-in estimate is corrected by a one-step
//! adjustment. The variance estimate and Wald interval follow from the same
//! per-row influence terms.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::glm::{Link, PseudoLikContext};
use crate::linalg::{self, dot, Matrix};
use crate::rng;
use crate::solver::{self, PenalizedFit, PenaltySpec, SolverOptions};

/// Labeled and unlabeled observations, stacked with the labeled rows first.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiSupervisedData {
    /// `N × (p+1)`, intercept first.
    x: Matrix,
    /// `N × (p+q+1)`: `(X, S)`.
    w: Matrix,
    y: Vec<f64>,
}

fn check_intercept(m: &Matrix, context: &'static str) -> Result<()> {
    if m.cols() == 0 || (0..m.rows()).any(|i| m.get(i, 0) != 1.0) {
        return Err(Error::Domain(format!("{context}: first column must be the intercept (all ones)")));
    }
    Ok(())
}

impl SemiSupervisedData {
    /// Semi-supervised data set; requires at least one labeled and one
    /// unlabeled row. Covariate blocks carry the intercept column first.
    pub fn new(
        labeled_x: Matrix,
        labeled_s: Matrix,
        labeled_y: Vec<f64>,
        unlabeled_x: Matrix,
        unlabeled_s: Matrix,
    ) -> Result<Self> {
        if unlabeled_x.rows() == 0 {
            return Err(Error::Domain("semi-supervised data needs at least one unlabeled row".into()));
        }
        Self::build(labeled_x, labeled_s, labeled_y, unlabeled_x, unlabeled_s)
    }

    /// Labeled rows only (`N = n`, `ρ = 1`): the supervised special case.
    pub fn labeled_only(labeled_x: Matrix, labeled_s: Matrix, labeled_y: Vec<f64>) -> Result<Self> {
        let p1 = labeled_x.cols();
        let q = labeled_s.cols();
        Self::build(labeled_x, labeled_s, labeled_y, Matrix::zeros(0, p1), Matrix::zeros(0, q))
    }

    fn build(
        labeled_x: Matrix,
        labeled_s: Matrix,
        labeled_y: Vec<f64>,
        unlabeled_x: Matrix,
        unlabeled_s: Matrix,
    ) -> Result<Self> {
        let n = labeled_x.rows();
        if n == 0 {
            return Err(Error::Domain("semi-supervised data needs at least one labeled row".into()));
        }
        check_len("labeled outcome", n, labeled_y.len())?;
        check_len("labeled surrogate rows", n, labeled_s.rows())?;
        check_len("unlabeled surrogate rows", unlabeled_x.rows(), unlabeled_s.rows())?;
        check_len("unlabeled covariate columns", labeled_x.cols(), unlabeled_x.cols())?;
        check_len("unlabeled surrogate columns", labeled_s.cols(), unlabeled_s.cols())?;
        check_intercept(&labeled_x, "labeled covariates")?;
        check_intercept(&unlabeled_x, "unlabeled covariates")?;
        let finite = |m: &Matrix| m.as_slice().iter().all(|v| v.is_finite());
        if !(finite(&labeled_x) && finite(&labeled_s) && finite(&unlabeled_x) && finite(&unlabeled_s)) {
            return Err(Error::Domain("covariates and surrogates must be finite".into()));
        }
        if labeled_y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("labeled outcomes must be finite".into()));
        }
        let x = labeled_x.vstack(&unlabeled_x)?;
        let s = labeled_s.vstack(&unlabeled_s)?;
        let w = x.hstack(&s)?;
        Ok(SemiSupervisedData { x, w, y: labeled_y })
    }

    /// The labeled rows alone, as a supervised data set.
    pub fn labeled_part(&self) -> SemiSupervisedData {
        let n = self.n_labeled();
        SemiSupervisedData {
            x: self.x.slice_rows(0, n),
            w: self.w.slice_rows(0, n),
            y: self.y.clone(),
        }
    }

    /// `n`.
    pub fn n_labeled(&self) -> usize {
        self.y.len()
    }

    /// `N`.
    pub fn n_total(&self) -> usize {
        self.x.rows()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.n_total() - self.n_labeled()
    }

    /// Covariate count `p`, intercept excluded.
    pub fn n_covariates(&self) -> usize {
        self.x.cols() - 1
    }

    /// Surrogate count `q`.
    pub fn n_surrogates(&self) -> usize {
        self.w.cols() - self.x.cols()
    }

    /// Labeled fraction `ρ = n/N`.
    pub fn rho(&self) -> f64 {
        self.n_labeled() as f64 / self.n_total() as f64
    }

    pub fn is_supervised(&self) -> bool {
        self.n_unlabeled() == 0
    }

    /// Stacked covariates, `N × (p+1)`.
    pub fn x(&self) -> &Matrix {
        &self.x
    }

    /// Stacked `(X, S)`, `N × (p+q+1)`.
    pub fn w(&self) -> &Matrix {
        &self.w
    }

    /// Labeled outcomes.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Surrogate block `N × q`.
    pub fn surrogates(&self) -> Matrix {
        let p1 = self.x.cols();
        Matrix::from_fn(self.n_total(), self.n_surrogates(), |i, j| self.w.get(i, p1 + j))
    }
}

/// Random partition of labeled and unlabeled rows into `K` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPartition {
    labeled_folds: Vec<Vec<usize>>,
    unlabeled_folds: Vec<Vec<usize>>,
    fold_of: Vec<usize>,
}

impl FoldPartition {
    /// Builds a partition from explicit folds over stacked row indices.
    pub fn from_folds(
        labeled_folds: Vec<Vec<usize>>,
        unlabeled_folds: Vec<Vec<usize>>,
        n_labeled: usize,
        n_total: usize,
    ) -> Result<Self> {
        let k = labeled_folds.len();
        check_len("unlabeled fold count", k, unlabeled_folds.len())?;
        let mut fold_of = vec![usize::MAX; n_total];
        for (f, (lab, unl)) in labeled_folds.iter().zip(&unlabeled_folds).enumerate() {
            for &i in lab {
                if i >= n_labeled || fold_of[i] != usize::MAX {
                    return Err(Error::Config(format!("labeled fold {f} has an invalid or repeated row {i}")));
                }
                fold_of[i] = f;
            }
            for &i in unl {
                if i < n_labeled || i >= n_total || fold_of[i] != usize::MAX {
                    return Err(Error::Config(format!("unlabeled fold {f} has an invalid or repeated row {i}")));
                }
                fold_of[i] = f;
            }
        }
        if fold_of.iter().any(|&f| f == usize::MAX) {
            return Err(Error::Config("folds do not cover every row".into()));
        }
        let mut labeled_folds = labeled_folds;
        let mut unlabeled_folds = unlabeled_folds;
        for f in labeled_folds.iter_mut().chain(unlabeled_folds.iter_mut()) {
            f.sort_unstable();
        }
        Ok(FoldPartition {
            labeled_folds,
            unlabeled_folds,
            fold_of,
        })
    }

    /// Fold count `K`.
    pub fn k(&self) -> usize {
        self.labeled_folds.len()
    }

    /// `I_k`, ascending stacked indices.
    pub fn labeled(&self, k: usize) -> &[usize] {
        &self.labeled_folds[k]
    }

    /// `J_k`, ascending stacked indices.
    pub fn unlabeled(&self, k: usize) -> &[usize] {
        &self.unlabeled_folds[k]
    }

    /// `N_k = n_k + |J_k|`.
    pub fn size(&self, k: usize) -> usize {
        self.labeled_folds[k].len() + self.unlabeled_folds[k].len()
    }

    /// Fold of each stacked row.
    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    fn n_labeled(&self) -> usize {
        self.labeled_folds.iter().map(Vec::len).sum()
    }

    /// Ascending labeled rows outside every listed fold.
    pub fn labeled_outside(&self, excluded: &[usize]) -> Vec<usize> {
        (0..self.n_labeled())
            .filter(|&i| !excluded.contains(&self.fold_of[i]))
            .collect()
    }

    /// Ascending stacked rows outside every listed fold.
    pub fn rows_outside(&self, excluded: &[usize]) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| !excluded.contains(&self.fold_of[i]))
            .collect()
    }

    /// The same partition with fold `k` renamed `perm[k]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let k = self.k();
        check_len("fold permutation", k, perm.len())?;
        let mut seen = vec![false; k];
        for &t in perm {
            if t >= k || seen[t] {
                return Err(Error::Config("fold relabeling is not a permutation".into()));
            }
            seen[t] = true;
        }
        let mut labeled = vec![Vec::new(); k];
        let mut unlabeled = vec![Vec::new(); k];
        for f in 0..k {
            labeled[perm[f]] = self.labeled_folds[f].clone();
            unlabeled[perm[f]] = self.unlabeled_folds[f].clone();
        }
        FoldPartition::from_folds(labeled, unlabeled, self.n_labeled(), self.fold_of.len())
    }
}

/// Seeded random partition into `k` folds of near-equal size, labeled and
/// unlabeled rows split separately.
pub fn make_folds(data: &SemiSupervisedData, k: usize, seed: u64) -> Result<FoldPartition> {
    let n = data.n_labeled();
    let m = data.n_unlabeled();
    let upper = if data.is_supervised() { n } else { n.min(m) };
    if k < 2 || k > upper {
        return Err(Error::Config(format!(
            "fold count K = {k} must satisfy 2 <= K <= {upper} (labeled rows {n}, unlabeled rows {m})"
        )));
    }
    let split = |count: usize, offset: usize, tag: &str| {
        let mut stream = rng::stream(seed, tag, 0);
        let perm = rng::permutation(count, &mut stream);
        let mut folds = vec![Vec::new(); k];
        for (pos, &i) in perm.iter().enumerate() {
            folds[pos % k].push(offset + i);
        }
        folds
    };
    let labeled = split(n, 0, "labeled-folds");
    let unlabeled = split(m, n, "unlabeled-folds");
    FoldPartition::from_folds(labeled, unlabeled, n, data.n_total())
}

fn imputation_fit_on(
    data: &SemiSupervisedData,
    rows: &[usize],
    link: Link,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<PenalizedFit> {
    if rows.is_empty() {
        return Err(Error::Domain("imputation fit needs labeled rows".into()));
    }
    let response: Vec<f64> = rows.iter().map(|&i| data.y[i]).collect();
    let ctx = PseudoLikContext::with_rows(&data.w, rows, &response, link)?;
    let penalty = PenaltySpec::intercept_free(lambda, data.w.cols())?;
    solver::fit_penalized_pl(&ctx, &penalty, opts)
}

/// Imputation model: penalized regression of `Y` on `W = (X, S)` over the
/// labeled rows, intercept unpenalized.
pub fn fit_imputation(
    data: &SemiSupervisedData,
    link: Link,
    lambda_gamma: f64,
    opts: &SolverOptions,
) -> Result<PenalizedFit> {
    let rows: Vec<usize> = (0..data.n_labeled()).collect();
    imputation_fit_on(data, &rows, link, lambda_gamma, opts)
}

/// `Ŷ_i = g(γᵀW_i)` for every unlabeled row.
pub fn impute_outcomes(gamma: &[f64], data: &SemiSupervisedData, link: Link) -> Result<Vec<f64>> {
    check_len("imputation coefficients", data.w.cols(), gamma.len())?;
    Ok((data.n_labeled()..data.n_total())
        .map(|i| link.mean(dot(data.w.row(i), gamma)))
        .collect())
}

/// Response vector for the target fit over `rows`: observed `Y` on labeled
/// rows, `g(γᵀW)` on unlabeled rows.
fn stacked_response(
    data: &SemiSupervisedData,
    rows: &[usize],
    gamma: Option<&[f64]>,
    link: Link,
) -> Result<Vec<f64>> {
    let n = data.n_labeled();
    rows.iter()
        .map(|&i| {
            if i < n {
                Ok(data.y[i])
            } else {
                let g = gamma.ok_or_else(|| Error::Domain("unlabeled rows need imputation coefficients".into()))?;
                Ok(link.mean(dot(data.w.row(i), g)))
            }
        })
        .collect()
}

fn target_fit_on(
    data: &SemiSupervisedData,
    rows: &[usize],
    gamma: Option<&[f64]>,
    link: Link,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<PenalizedFit> {
    let response = stacked_response(data, rows, gamma, link)?;
    let ctx = PseudoLikContext::with_rows(&data.x, rows, &response, link)?;
    let penalty = PenaltySpec::intercept_free(lambda, data.x.cols())?;
    solver::fit_penalized_pl(&ctx, &penalty, opts)
}

/// Prediction model: penalized regression over all `N` rows of the stacked
/// response (observed `Y` on labeled rows, imputed `Ŷ` on unlabeled rows).
pub fn fit_target(
    data: &SemiSupervisedData,
    gamma: &[f64],
    link: Link,
    lambda_beta: f64,
    opts: &SolverOptions,
) -> Result<PenalizedFit> {
    check_len("imputation coefficients", data.w.cols(), gamma.len())?;
    let rows: Vec<usize> = (0..data.n_total()).collect();
    target_fit_on(data, &rows, Some(gamma), link, lambda_beta, opts)
}

/// `g(βᵀx_new)`.
pub fn point_predict(beta: &[f64], x_new: &[f64], link: Link) -> Result<f64> {
    check_len("point_predict", beta.len(), x_new.len())?;
    Ok(link.mean(dot(beta, x_new)))
}

/// Penalty levels shared by the cross-fitted nuisance fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuisanceLambdas {
    pub gamma: f64,
    pub beta: f64,
}

/// Conditions worth reporting that do not stop the computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FitWarning {
    /// Labeled training rows of a fit share one outcome value.
    ConstantOutcome { fit: String },
    /// The solver stopped at its iteration cap.
    NotConverged { fit: String },
}

/// Index of the unordered fold pair `{a, b}`, `a ≠ b`, in lexicographic order.
pub fn pair_index(a: usize, b: usize, k: usize) -> usize {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    lo * k - lo * (lo + 1) / 2 + (hi - lo - 1)
}

/// Nuisance fits for one pair of excluded folds.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFit {
    pub folds: (usize, usize),
    /// `None` for supervised data.
    pub gamma: Option<PenalizedFit>,
    pub beta: PenalizedFit,
    pub training_rows: usize,
}

/// Every fit that does not depend on `x_new`: per-fold and per-pair
/// nuisance fits, the per-fold weighted Gram matrices `Ĥ⁽ᵏ⁾`, and the
/// out-of-fold fitted means of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossFitBundle {
    partition: FoldPartition,
    link: Link,
    rho: f64,
    lambdas: NuisanceLambdas,
    /// `γ̂⁽ᵏ⁾`; empty for supervised data.
    gamma_k: Vec<PenalizedFit>,
    beta_k: Vec<PenalizedFit>,
    pairs: Vec<PairFit>,
    hessians: Vec<Matrix>,
    /// `g(β̂⁽ᵏ⁽ⁱ⁾⁾ᵀX_i)` for every stacked row.
    fitted_beta: Vec<f64>,
    /// `g(γ̂⁽ᵏ⁽ⁱ⁾⁾ᵀW_i)`; empty for supervised data.
    fitted_gamma: Vec<f64>,
    warnings: Vec<FitWarning>,
}

impl CrossFitBundle {
    pub fn partition(&self) -> &FoldPartition {
        &self.partition
    }

    pub fn link(&self) -> Link {
        self.link
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lambdas(&self) -> NuisanceLambdas {
        self.lambdas
    }

    pub fn gamma_fits(&self) -> &[PenalizedFit] {
        &self.gamma_k
    }

    pub fn beta_fits(&self) -> &[PenalizedFit] {
        &self.beta_k
    }

    pub fn pair_fits(&self) -> &[PairFit] {
        &self.pairs
    }

    pub fn pair(&self, a: usize, b: usize) -> &PairFit {
        &self.pairs[pair_index(a, b, self.partition.k())]
    }

    /// `Ĥ⁽ᵏ⁾ = (1/(N−N_k)) Σ_{k′≠k} Σ_{i∈fold k′} g′(β̂⁽ᵏᵏ′⁾ᵀX_i) X_i X_iᵀ`.
    pub fn hessian(&self, k: usize) -> &Matrix {
        &self.hessians[k]
    }

    pub fn warnings(&self) -> &[FitWarning] {
        &self.warnings
    }

    pub fn all_converged(&self) -> bool {
        self.gamma_k.iter().chain(&self.beta_k).all(|f| f.converged)
            && self
                .pairs
                .iter()
                .all(|p| p.beta.converged && p.gamma.as_ref().is_none_or(|g| g.converged))
    }

    fn dim(&self) -> usize {
        self.hessians[0].rows()
    }
}

/// Optional starting points for the nuisance fits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WarmStarts {
    pub gamma: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
}

fn note_fit(warnings: &mut Vec<FitWarning>, fit: &PenalizedFit, name: impl FnOnce() -> String) {
    if !fit.converged {
        warnings.push(FitWarning::NotConverged { fit: name() });
    }
}

/// Cross-fitted nuisance fits over a given partition, `K ≥ 3`.
///
/// Pairwise fits reuse the single-exclusion penalty levels. Training rows are
/// always passed in ascending order and warm starts do not depend on fold
/// labels, so relabeling the folds reproduces every fit exactly.
pub fn fit_crossfit_bundle_with_partition(
    data: &SemiSupervisedData,
    link: Link,
    partition: FoldPartition,
    lambdas: NuisanceLambdas,
    warm: &WarmStarts,
    opts: &SolverOptions,
) -> Result<CrossFitBundle> {
    let k = partition.k();
    if k < 3 {
        return Err(Error::Config(format!("cross-fitting needs K >= 3 folds, got {k}")));
    }
    check_len("fold assignment", data.n_total(), partition.fold_of().len())?;
    let supervised = data.is_supervised();
    let n = data.n_labeled();
    let mut warnings = Vec::new();

    let mut gamma_opts = opts.clone();
    gamma_opts.warm_start = warm.gamma.clone();
    let mut beta_opts = opts.clone();
    beta_opts.warm_start = warm.beta.clone();

    let constant_outcome = |rows: &[usize]| {
        let labeled: Vec<f64> = rows.iter().filter(|&&i| i < n).map(|&i| data.y[i]).collect();
        labeled.windows(2).all(|w| w[0] == w[1])
    };

    let mut gamma_k = Vec::new();
    let mut beta_k = Vec::with_capacity(k);
    for f in 0..k {
        let gamma = if supervised {
            None
        } else {
            let rows = partition.labeled_outside(&[f]);
            let fit = imputation_fit_on(data, &rows, link, lambdas.gamma, &gamma_opts)?;
            note_fit(&mut warnings, &fit, || format!("gamma[{f}]"));
            gamma_k.push(fit);
            Some(gamma_k[f].coefficients.as_slice())
        };
        let rows = partition.rows_outside(&[f]);
        if constant_outcome(&rows) {
            warnings.push(FitWarning::ConstantOutcome { fit: format!("beta[{f}]") });
        }
        let fit = target_fit_on(data, &rows, gamma, link, lambdas.beta, &beta_opts)?;
        note_fit(&mut warnings, &fit, || format!("beta[{f}]"));
        beta_k.push(fit);
    }

    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for a in 0..k {
        for b in (a + 1)..k {
            let gamma = if supervised {
                None
            } else {
                let rows = partition.labeled_outside(&[a, b]);
                let fit = imputation_fit_on(data, &rows, link, lambdas.gamma, &gamma_opts)?;
                note_fit(&mut warnings, &fit, || format!("gamma[{a},{b}]"));
                Some(fit)
            };
            let rows = partition.rows_outside(&[a, b]);
            let beta = target_fit_on(
                data,
                &rows,
                gamma.as_ref().map(|g| g.coefficients.as_slice()),
                link,
                lambdas.beta,
                &beta_opts,
            )?;
            note_fit(&mut warnings, &beta, || format!("beta[{a},{b}]"));
            pairs.push(PairFit {
                folds: (a, b),
                gamma,
                beta,
                training_rows: rows.len(),
            });
        }
    }

    let fold_of = partition.fold_of();
    let mut hessians = Vec::with_capacity(k);
    for f in 0..k {
        let rows = partition.rows_outside(&[f]);
        let weights: Vec<f64> = rows
            .iter()
            .map(|&i| {
                let pair = &pairs[pair_index(f, fold_of[i], k)];
                link.derivative(dot(data.x.row(i), &pair.beta.coefficients))
            })
            .collect();
        hessians.push(linalg::weighted_gram(&data.x, Some(&rows), &weights, 1.0 / rows.len() as f64)?);
    }

    let fitted_beta: Vec<f64> = (0..data.n_total())
        .map(|i| link.mean(dot(data.x.row(i), &beta_k[fold_of[i]].coefficients)))
        .collect();
    let fitted_gamma: Vec<f64> = if supervised {
        Vec::new()
    } else {
        (0..data.n_total())
            .map(|i| link.mean(dot(data.w.row(i), &gamma_k[fold_of[i]].coefficients)))
            .collect()
    };
    if fitted_beta.iter().chain(&fitted_gamma).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("cross-fitted predictions are not finite".into()));
    }

    Ok(CrossFitBundle {
        partition,
        link,
        rho: data.rho(),
        lambdas,
        gamma_k,
        beta_k,
        pairs,
        hessians,
        fitted_beta,
        fitted_gamma,
        warnings,
    })
}

/// Cross-fitted nuisance fits over a fresh seeded partition.
pub fn fit_crossfit_bundle(
    data: &SemiSupervisedData,
    link: Link,
    lambdas: NuisanceLambdas,
    k: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<CrossFitBundle> {
    let partition = make_folds(data, k, seed)?;
    fit_crossfit_bundle_with_partition(data, link, partition, lambdas, &WarmStarts::default(), opts)
}

/// Per-fold projection directions `û⁽ᵏ⁾` for one `x_new`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub x_new: Vec<f64>,
    /// `‖x_new‖₂`.
    pub x_norm: f64,
    /// `x_new / ‖x_new‖₂`.
    pub x_std: Vec<f64>,
    pub lambda_u: f64,
    pub directions: Vec<PenalizedFit>,
}

/// Validates `x_new` and returns `(‖x_new‖₂, x_std)`.
pub fn standardize(x_new: &[f64]) -> Result<(f64, Vec<f64>)> {
    if x_new.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("x_new must be finite".into()));
    }
    let norm = linalg::norm2(x_new);
    if norm == 0.0 {
        return Err(Error::Domain("x_new must be nonzero".into()));
    }
    Ok((norm, x_new.iter().map(|v| v / norm).collect()))
}

/// Solves `min ½uᵀĤ⁽ᵏ⁾u − uᵀx_std + λ_u‖u‖₁` for every fold.
pub fn fit_projection(
    bundle: &CrossFitBundle,
    x_new: &[f64],
    lambda_u: f64,
    opts: &SolverOptions,
) -> Result<Projection> {
    check_len("x_new", bundle.dim(), x_new.len())?;
    let (x_norm, x_std) = standardize(x_new)?;
    let directions = bundle
        .hessians
        .iter()
        .map(|h| solver::fit_penalized_quadratic_gram(h, &x_std, lambda_u, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(Projection {
        x_new: x_new.to_vec(),
        x_norm,
        x_std,
        lambda_u,
        directions,
    })
}

/// Terms of the debiased estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DebiasedComponents {
    /// `(1/K) Σ_k x_stdᵀβ̂⁽ᵏ⁾`.
    pub plug_in: f64,
    /// `(1/N) Σ_k Σ_{J_k} û⁽ᵏ⁾ᵀX_i {g(β̂⁽ᵏ⁾ᵀX_i) − g(γ̂⁽ᵏ⁾ᵀW_i)}`.
    pub unlabeled_correction: f64,
    /// `(1/n) Σ_k Σ_{I_k} û⁽ᵏ⁾ᵀX_i {(1−ρ)g(γ̂⁽ᵏ⁾ᵀW_i) + ρ g(β̂⁽ᵏ⁾ᵀX_i) − Y_i}`.
    pub labeled_correction: f64,
    /// `plug_in − unlabeled_correction − labeled_correction`.
    pub theta_hat: f64,
}

/// Sum that does not depend on the order of its terms.
fn order_free_sum(mut values: Vec<f64>) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values.iter().sum()
}

struct RowTerms<'a> {
    bundle: &'a CrossFitBundle,
    projection: &'a Projection,
    data: &'a SemiSupervisedData,
}

impl RowTerms<'_> {
    fn check(&self) -> Result<()> {
        let b = self.bundle;
        check_len("projection folds", b.partition.k(), self.projection.directions.len())?;
        check_len("bundle rows", self.data.n_total(), b.fitted_beta.len())?;
        if b.rho != self.data.rho() {
            return Err(Error::Domain("bundle was fitted on different data".into()));
        }
        Ok(())
    }

    /// `û⁽ᵏ⁽ⁱ⁾⁾ᵀX_i`.
    fn u_x(&self, i: usize) -> f64 {
        let f = self.bundle.partition.fold_of()[i];
        dot(&self.projection.directions[f].coefficients, self.data.x.row(i))
    }

    /// `(1−ρ)g(γ̂ᵀW_i) + ρ g(β̂ᵀX_i) − Y_i` on a labeled row.
    fn labeled_residual(&self, i: usize) -> f64 {
        let b = self.bundle;
        let rho = b.rho;
        let gb = b.fitted_beta[i];
        let blended = if b.fitted_gamma.is_empty() {
            gb
        } else {
            (1.0 - rho) * b.fitted_gamma[i] + rho * gb
        };
        blended - self.data.y[i]
    }

    /// `g(β̂ᵀX_i) − g(γ̂ᵀW_i)` on an unlabeled row.
    fn unlabeled_gap(&self, i: usize) -> f64 {
        self.bundle.fitted_beta[i] - self.bundle.fitted_gamma[i]
    }
}

/// Cross-fitted one-step debiased estimate of `x_stdᵀβ₀`.
///
/// Row sums run in stacked-row order, so the result is unchanged when the
/// folds are relabeled.
pub fn debiased_estimate(
    bundle: &CrossFitBundle,
    projection: &Projection,
    data: &SemiSupervisedData,
) -> Result<DebiasedComponents> {
    let t = RowTerms { bundle, projection, data };
    t.check()?;
    let k = bundle.partition.k();
    let plug_in = order_free_sum(
        bundle.beta_k.iter().map(|f| dot(&projection.x_std, &f.coefficients)).collect(),
    ) / k as f64;
    let n = data.n_labeled();
    let mut labeled = 0.0;
    for i in 0..n {
        labeled += t.u_x(i) * t.labeled_residual(i);
    }
    let mut unlabeled = 0.0;
    for i in n..data.n_total() {
        unlabeled += t.u_x(i) * t.unlabeled_gap(i);
    }
    let labeled_correction = labeled / n as f64;
    let unlabeled_correction = unlabeled / data.n_total() as f64;
    let theta_hat = plug_in - unlabeled_correction - labeled_correction;
    if !theta_hat.is_finite() {
        return Err(Error::Numerical("debiased estimate is not finite".into()));
    }
    Ok(DebiasedComponents {
        plug_in,
        unlabeled_correction,
        labeled_correction,
        theta_hat,
    })
}

/// Variance estimate of `√n (θ̂ − x_stdᵀβ₀)`.
pub fn variance_estimate(
    bundle: &CrossFitBundle,
    projection: &Projection,
    data: &SemiSupervisedData,
) -> Result<f64> {
    let t = RowTerms { bundle, projection, data };
    t.check()?;
    let n = data.n_labeled();
    let mut labeled = 0.0;
    for i in 0..n {
        let v = t.u_x(i) * t.labeled_residual(i);
        labeled += v * v;
    }
    let mut unlabeled = 0.0;
    for i in n..data.n_total() {
        let v = t.u_x(i) * t.unlabeled_gap(i);
        unlabeled += v * v;
    }
    let rho = bundle.rho;
    let v_hat = labeled / n as f64 + rho * rho * unlabeled / n as f64;
    if !v_hat.is_finite() {
        return Err(Error::Numerical("variance estimate is not finite".into()));
    }
    Ok(v_hat)
}

/// Labeled-only analog `(1/n) Σ_{I} (û⁽ᵏ⁾ᵀX_i)² {Y_i − g(β̂⁽ᵏ⁾ᵀX_i)}²` of the
/// supervised estimator's variance, evaluated at the same fits.
pub fn supervised_variance(
    bundle: &CrossFitBundle,
    projection: &Projection,
    data: &SemiSupervisedData,
) -> Result<f64> {
    let t = RowTerms { bundle, projection, data };
    t.check()?;
    let n = data.n_labeled();
    let mut total = 0.0;
    for i in 0..n {
        let v = t.u_x(i) * (data.y[i] - bundle.fitted_beta[i]);
        total += v * v;
    }
    Ok(total / n as f64)
}

/// Interval for `x_newᵀβ₀` and for `g(x_newᵀβ₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionInterval {
    /// Debiased estimate of `x_stdᵀβ₀`.
    pub theta_hat: f64,
    pub v_hat: f64,
    pub alpha: f64,
    /// `‖x_new‖₂`.
    pub x_norm: f64,
    /// On the `x_newᵀβ` scale.
    pub ci_linear: (f64, f64),
    /// `g` applied to `ci_linear`.
    pub ci_response: (f64, f64),
    /// `g(‖x_new‖₂ θ̂)`.
    pub point_response: f64,
}

impl PredictionInterval {
    /// `‖x_new‖₂ θ̂`.
    pub fn linear_estimate(&self) -> f64 {
        self.x_norm * self.theta_hat
    }

    /// `‖x_new‖₂ √(V̂/n)`.
    pub fn standard_error(&self, n: usize) -> f64 {
        self.x_norm * libm::sqrt(self.v_hat / n as f64)
    }

    pub fn covers_linear(&self, truth: f64) -> bool {
        self.ci_linear.0 <= truth && truth <= self.ci_linear.1
    }
}

/// Wald interval `‖x_new‖₂ (θ̂ ± z_{α/2} √(V̂/n))` and its image under `g`.
pub fn confidence_interval(
    theta_hat: f64,
    v_hat: f64,
    x_new: &[f64],
    n: usize,
    alpha: f64,
    link: Link,
) -> Result<PredictionInterval> {
    if !(v_hat >= 0.0) || !v_hat.is_finite() {
        return Err(Error::Domain(format!("variance estimate must be finite and >= 0, got {v_hat}")));
    }
    if n == 0 {
        return Err(Error::Domain("confidence interval needs n >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !theta_hat.is_finite() {
        return Err(Error::Domain("theta_hat must be finite".into()));
    }
    let (x_norm, _) = standardize(x_new)?;
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let half = z * libm::sqrt(v_hat / n as f64);
    let lo = x_norm * (theta_hat - half);
    let hi = x_norm * (theta_hat + half);
    Ok(PredictionInterval {
        theta_hat,
        v_hat,
        alpha,
        x_norm,
        ci_linear: (lo, hi),
        ci_response: (link.mean(lo), link.mean(hi)),
        point_response: link.mean(x_norm * theta_hat),
    })
}

/// Inverse standard normal CDF: rational approximation refined by one
/// Halley step.
pub fn normal_quantile(prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::Domain(format!("quantile probability must lie in (0, 1), got {prob}")));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if prob < P_LOW {
        tail(libm::sqrt(-2.0 * libm::log(prob)))
    } else if prob <= 1.0 - P_LOW {
        let q = prob - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail(libm::sqrt(-2.0 * libm::log(1.0 - prob)))
    };
    let e = crate::glm::normal_cdf(x) - prob;
    let u = e / crate::glm::normal_pdf(x);
    Ok(x - u / (1.0 + 0.5 * x * u))
}
