//! Link functions and the pseudo log-likelihood.
//!
//! For a monotone mean function `g` with antiderivative `G`, the pseudo
//! log-likelihood of an outcome `y` at linear predictor `x` is
//! `ℓ(y, x) = y·x − G(x)`. Its score `{y − g(x)}` reproduces the working-model
//! moment condition whether or not the model is correct. Every solver in this
//! crate minimizes the *negative* average, `(1/m) Σ {G(x_i) − y_i x_i}`.

use core::f64::consts::{FRAC_1_SQRT_2, LN_2};


use crate::error::{check_len, Error, Result};
use crate::linalg::{self, Matrix};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Monotone, smooth link with bounded derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    /// `g(x) = 1/(1+e^{−x})`, `G(x) = log(1+e^x)`.
    Logit,
    /// `g(x) = x`, `G(x) = x²/2`.
    Identity,
    /// `g(x) = Φ(x)`, `G(x) = xΦ(x) + φ(x)`.
    Probit,
}

impl Link {
    pub const ALL: [Link; 3] = [Link::Logit, Link::Identity, Link::Probit];

    pub fn name(self) -> &'static str {
        match self {
            Link::Logit => "logit",
            Link::Identity => "identity",
            Link::Probit => "probit",
        }
    }

    pub fn from_name(name: &str) -> Option<Link> {
        match name {
            "logit" => Some(Link::Logit),
            "identity" => Some(Link::Identity),
            "probit" => Some(Link::Probit),
            _ => None,
        }
    }

    /// Mean function `g`.
    #[inline]
    pub fn mean(self, x: f64) -> f64 {
        match self {
            Link::Logit => expit(x),
            Link::Identity => x,
            Link::Probit => normal_cdf(x),
        }
    }

    /// Derivative `g′`.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Link::Logit => {
                let mu = expit(x);
                mu * (1.0 - mu)
            }
            Link::Identity => 1.0,
            Link::Probit => normal_pdf(x),
        }
    }

    /// Antiderivative `G` with `G′ = g`.
    #[inline]
    pub fn antiderivative(self, x: f64) -> f64 {
        match self {
            Link::Logit => softplus(x),
            Link::Identity => 0.5 * x * x,
            Link::Probit => x * normal_cdf(x) + normal_pdf(x),
        }
    }

    /// Declared bound `M ≥ sup g′`.
    pub fn derivative_bound(self) -> f64 {
        match self {
            Link::Logit => 0.25,
            Link::Identity => 1.0,
            Link::Probit => FRAC_1_SQRT_2PI,
        }
    }

    /// Closed interval containing every value of `g`.
    pub fn range(self) -> (f64, f64) {
        match self {
            Link::Logit | Link::Probit => (0.0, 1.0),
            Link::Identity => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

/// Numerically stable logistic function.
#[inline]
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + libm::log1p(libm::exp(-x.abs()))
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * libm::exp(-0.5 * x * x)
}

/// Pseudo log-likelihood `ℓ(y, x) = y·x − G(x)`.
pub fn pl_loss(y: f64, x: f64, link: Link) -> Result<f64> {
    if !y.is_finite() || !x.is_finite() {
        return Err(Error::Domain("pl_loss needs finite inputs".into()));
    }
    Ok(y * x - link.antiderivative(x))
}

/// Design, response and link for one pseudo-likelihood problem.
///
/// The design may be addressed through a row subset; `response[k]` belongs to
/// the `k`-th addressed row. The first design column must be the intercept.
#[derive(Debug, Clone, Copy)]
pub struct PseudoLikContext<'a> {
    design: &'a Matrix,
    rows: Option<&'a [usize]>,
    response: &'a [f64],
    link: Link,
}

impl<'a> PseudoLikContext<'a> {
    pub fn new(design: &'a Matrix, response: &'a [f64], link: Link) -> Result<Self> {
        Self::build(design, None, response, link)
    }

    pub fn with_rows(
        design: &'a Matrix,
        rows: &'a [usize],
        response: &'a [f64],
        link: Link,
    ) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&i| i >= design.rows()) {
            return Err(Error::Shape {
                context: "PseudoLikContext rows",
                expected: design.rows(),
                found: bad,
            });
        }
        Self::build(design, Some(rows), response, link)
    }

    fn build(
        design: &'a Matrix,
        rows: Option<&'a [usize]>,
        response: &'a [f64],
        link: Link,
    ) -> Result<Self> {
        let ctx = PseudoLikContext {
            design,
            rows,
            response,
            link,
        };
        check_len("PseudoLikContext response", ctx.len(), response.len())?;
        if design.cols() == 0 {
            return Err(Error::Domain("design has no columns".into()));
        }
        if (0..ctx.len()).any(|k| ctx.row(k)[0] != 1.0) {
            return Err(Error::Domain("first design column must be the intercept (all ones)".into()));
        }
        if response.iter().any(|y| !y.is_finite()) {
            return Err(Error::Domain("response contains non-finite values".into()));
        }
        Ok(ctx)
    }

    #[inline]
    pub fn len(&self) -> usize {
        linalg::subset_len(self.design, self.rows)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.design.cols()
    }

    #[inline]
    pub fn link(&self) -> Link {
        self.link
    }

    pub fn design(&self) -> &'a Matrix {
        self.design
    }

    pub fn rows(&self) -> Option<&'a [usize]> {
        self.rows
    }

    pub fn response(&self) -> &'a [f64] {
        self.response
    }

    /// The `k`-th addressed design row.
    #[inline]
    pub fn row(&self, k: usize) -> &'a [f64] {
        match self.rows {
            None => self.design.row(k),
            Some(idx) => self.design.row(idx[k]),
        }
    }

    /// Linear predictors `design · coeffs` into `out`.
    pub fn linear_predictors_into(&self, coeffs: &[f64], out: &mut [f64]) {
        linalg::mul_vec_rows(self.design, self.rows, coeffs, out);
    }

    pub fn linear_predictors(&self, coeffs: &[f64]) -> Result<alloc::vec::Vec<f64>> {
        check_len("linear_predictors", self.dim(), coeffs.len())?;
        let mut out = alloc::vec![0.0; self.len()];
        self.linear_predictors_into(coeffs, &mut out);
        Ok(out)
    }

    /// Negative average pseudo log-likelihood at precomputed linear predictors.
    pub fn objective_at(&self, eta: &[f64]) -> f64 {
        let m = self.len().max(1) as f64;
        let total: f64 = eta
            .iter()
            .zip(self.response)
            .map(|(&e, &y)| self.link.antiderivative(e) - y * e)
            .sum();
        total / m
    }

    /// Gradient of [`Self::objective_at`] with respect to the coefficients.
    pub fn gradient_at(&self, eta: &[f64], residual: &mut [f64], out: &mut [f64]) {
        let m = self.len().max(1) as f64;
        for ((r, &e), &y) in residual.iter_mut().zip(eta).zip(self.response) {
            *r = (self.link.mean(e) - y) / m;
        }
        linalg::tmul_vec_rows(self.design, self.rows, residual, out);
    }
}

/// Minimized objective `(1/m) Σ {G(coeffsᵀx_i) − y_i coeffsᵀx_i}`, the
/// negative average pseudo log-likelihood.
pub fn pl_objective(ctx: &PseudoLikContext<'_>, coeffs: &[f64]) -> Result<f64> {
    let eta = ctx.linear_predictors(coeffs)?;
    let value = ctx.objective_at(&eta);
    if value.is_nan() {
        return Err(Error::Numerical("pseudo-likelihood objective is NaN".into()));
    }
    Ok(value)
}

/// Gradient `(1/m) Σ x_i {g(coeffsᵀx_i) − y_i}` of [`pl_objective`].
pub fn pl_gradient(ctx: &PseudoLikContext<'_>, coeffs: &[f64]) -> Result<alloc::vec::Vec<f64>> {
    let eta = ctx.linear_predictors(coeffs)?;
    let mut residual = alloc::vec![0.0; ctx.len()];
    let mut grad = alloc::vec![0.0; ctx.dim()];
    ctx.gradient_at(&eta, &mut residual, &mut grad);
    Ok(grad)
}

/// `G(0)` for the logistic link.
pub const LOGIT_G0: f64 = LN_2;
