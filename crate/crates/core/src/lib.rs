//! Surrogate-assisted semi-supervised (SAS) estimation and inference for
//! high-dimensional risk prediction.
//!
//! The crate is `no_std` and only needs `alloc`. It contains the numerical
//! core of the method:
//!
//! * [`glm`]: link functions and the pseudo log-likelihood loss,
//! * [`solver`]: L1-penalized proximal-gradient and coordinate-descent solvers,
//! * [`sas`]: two-step estimation, cross-fitted debiasing, variance and
//!   confidence intervals for individual predictions,
//! * [`sim`]: the two simulation designs and the numerical oracle for the
//!   population coefficient,
//! * [`pipeline`]: penalty selection and the end-to-end fit,
//! * [`metrics`]: AUC and Monte-Carlo summary statistics,
//! * [`study`]: one simulation replicate end to end.
//!
//! File formats, configuration and the parallel replication runner live in the
//! `sas-cli` companion crate.
#![no_std]

extern crate alloc;

pub mod error;
pub mod glm;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod sas;
pub mod sim;
pub mod solver;
pub mod study;

pub use error::{Error, Result};
pub use glm::{Link, PseudoLikContext};
pub use linalg::Matrix;
pub use pipeline::{fit_sas, LambdaRule, SasFit, SasSettings};
pub use sas::{PredictionInterval, SemiSupervisedData};
pub use solver::{PenalizedFit, PenaltySpec, SolverOptions};
