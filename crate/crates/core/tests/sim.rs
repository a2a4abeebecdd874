mod common;

use approx::assert_abs_diff_eq;
use sas_core::glm::PseudoLikContext;
use sas_core::sim::{self, Scenario, ScenarioConfig, XNewKind};
use sas_core::solver::{self, PenaltySpec, SolverOptions};
use sas_core::{Link, Matrix};

fn reduced(name: &str, p: usize, q: usize, n: usize, big_n: usize, seed: u64) -> ScenarioConfig {
    ScenarioConfig::from_name(name).unwrap().with_sizes(p, q, n, big_n).with_seed(seed)
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64)
}

fn all_rows(data: &sas_core::SemiSupervisedData) -> &Matrix {
    data.x()
}

/// Unpenalized logistic fit.
fn logistic(x: &Matrix, y: &[f64]) -> Vec<f64> {
    let ctx = PseudoLikContext::new(x, y, Link::Logit).unwrap();
    let opts = SolverOptions { tolerance: 1e-9, max_iterations: 100_000, ..SolverOptions::default() };
    let fit = solver::fit_penalized_pl(&ctx, &PenaltySpec::uniform(0.0, x.cols()).unwrap(), &opts).unwrap();
    assert!(fit.converged);
    fit.coefficients
}

#[test]
fn covariates_are_near_standardized() {
    for name in ["I-sparse-strong", "I-dense-moderate", "II-sparse-moderate"] {
        let cfg = reduced(name, 60, 10, 500, 20_000, 1);
        let simd = sim::generate(&cfg).unwrap();
        let x = all_rows(&simd.data);
        let (m, v) = mean_var(&x.column(1));
        assert!(m.abs() <= 0.1, "{name} column 1: mean {m}");
        assert!((0.7..=1.15).contains(&v), "{name} column 1: variance {v}");
        for j in 2..=60 {
            let (m, v) = mean_var(&x.column(j));
            assert!(m.abs() <= 0.1, "{name} column {j}: mean {m}");
            assert!((0.85..=1.15).contains(&v), "{name} column {j}: variance {v}");
        }
        for j in 1..10 {
            let (m, v) = mean_var(&simd.data.surrogates().column(j));
            assert!(m.abs() <= 0.1 && (0.85..=1.15).contains(&v), "{name} noise surrogate {j}: {m} {v}");
        }
    }
}

#[test]
fn generation_is_reproducible() {
    let cfg = reduced("I-dense-strong", 40, 8, 100, 1000, 77);
    assert_eq!(sim::generate(&cfg).unwrap(), sim::generate(&cfg).unwrap());
    assert_ne!(sim::generate(&cfg).unwrap(), sim::generate(&cfg.clone().with_seed(78)).unwrap());
    let (xa, ya) = sim::generate_test_set(&cfg, 100).unwrap();
    let (xb, yb) = sim::generate_test_set(&cfg, 100).unwrap();
    assert_eq!((xa, ya), (xb, yb));
    let ii = reduced("II-dense-strong", 40, 8, 100, 1000, 77);
    assert_eq!(sim::generate(&ii).unwrap(), sim::generate(&ii).unwrap());
}

#[test]
fn layout_and_truth_record() {
    let cfg = reduced("II-sparse-strong", 40, 5, 50, 400, 3);
    let simd = sim::generate_scenario_ii(&cfg).unwrap();
    let d = &simd.data;
    assert_eq!((d.n_labeled(), d.n_total(), d.n_covariates(), d.n_surrogates()), (50, 400, 40, 5));
    assert!(all_rows(d).column(0).iter().all(|&v| v == 1.0));
    assert_eq!(simd.truth.y_all.len(), 400);
    assert_eq!(&simd.truth.y_all[..50], d.y());
    assert_eq!(simd.truth.s1_signal, d.surrogates().column(0));
    assert!(sim::generate_scenario_i(&cfg).is_err());
    assert!(sim::generate_scenario_ii(&reduced("I-sparse-strong", 40, 5, 50, 400, 3)).is_err());
}

#[test]
fn scenario_i_without_surrogate_effect_decouples_s1_from_y() {
    let cfg = reduced("I-sparse-strong", 40, 5, 500, 20_000, 5);
    let mut params = cfg.params();
    params.theta = 0.0;
    let simd = sim::generate_with_params(&cfg, &params).unwrap();
    let (ms, vs) = mean_var(&simd.truth.s1_signal);
    let (my, vy) = mean_var(&simd.truth.y_all);
    let n = simd.truth.y_all.len() as f64;
    let cov = simd.truth.s1_signal.iter().zip(&simd.truth.y_all).map(|(s, y)| (s - ms) * (y - my)).sum::<f64>() / (n - 1.0);
    let corr = cov / (vs * vy).sqrt();
    assert!(corr.abs() <= 0.05, "correlation {corr}");
    let strong = sim::generate(&cfg).unwrap();
    let (ms, vs) = mean_var(&strong.truth.s1_signal);
    let (my, vy) = mean_var(&strong.truth.y_all);
    let cov = strong.truth.s1_signal.iter().zip(&strong.truth.y_all).map(|(s, y)| (s - ms) * (y - my)).sum::<f64>() / (n - 1.0);
    assert!(cov / (vs * vy).sqrt() > 0.1);
}

#[test]
fn scenario_i_outcome_ignores_covariates_outside_the_alpha_support() {
    let cfg = reduced("I-sparse-moderate", 40, 5, 50, 3000, 8);
    let base = sim::generate(&cfg).unwrap();
    let mut params = cfg.params();
    assert!(params.alpha[3..].iter().all(|&a| a == 0.0));
    params.xi = vec![0.0; 40];
    let other = sim::generate_with_params(&cfg, &params).unwrap();
    assert_eq!(base.truth.y_all, other.truth.y_all);
    assert_eq!(base.data.x(), other.data.x());
}

#[test]
fn scenario_ii_surrogate_moments_and_slope() {
    let cfg = reduced("II-sparse-moderate", 40, 3, 1000, 200_000, 9);
    let params = cfg.params();
    assert_eq!((params.nu, params.theta), (0.4, 2.0));
    let simd = sim::generate(&cfg).unwrap();
    let s1 = simd.data.surrogates().column(0);
    let (m, v) = mean_var(&s1[..20_000]);
    assert_eq!((params.mu_s, params.sigma_s), (0.66, 1.0));
    // The nominal centering constants leave S1 off-center and overdispersed.
    assert!((0.25..=0.5).contains(&m), "S1 mean {m}");
    assert!((2.0..=3.0).contains(&v), "S1 variance {v}");
    let design = Matrix::from_fn(s1.len(), 2, |i, j| if j == 0 { 1.0 } else { s1[i] });
    let coef = logistic(&design, &simd.truth.y_all);
    assert!((coef[1] - 2.0).abs() <= 0.1, "slope {}", coef[1]);
    let x1 = simd.data.x().column(1);
    let design = Matrix::from_fn(s1.len(), 3, |i, j| [1.0, s1[i], x1[i]][j]);
    let coef = logistic(&design, &simd.truth.y_all);
    assert!(coef[2].abs() <= 0.05, "X1 coefficient given S1: {}", coef[2]);
}

#[test]
fn oracle_coefficient_structure_and_stability() {
    for name in ["I-dense-moderate", "II-sparse-strong"] {
        let cfg = reduced(name, 100, 10, 500, 2000, 1);
        let a = sim::evaluate_oracle_beta(&cfg, 1_000_000).unwrap();
        let s = a.group_boundary;
        assert_eq!(s, if name.contains("dense") { 30 } else { 3 });
        assert_eq!(a.beta0.len(), 101);
        assert_eq!(a.beta0[0], a.eta[0]);
        assert_eq!(a.beta0[1], a.eta[1]);
        assert!(a.beta0[2..=s].iter().all(|&b| b == a.eta[2]));
        assert!(a.beta0[s + 1..].iter().all(|&b| b == a.eta[3]));
        let b = sim::evaluate_oracle_beta(&cfg.clone().with_seed(2), 1_000_000).unwrap();
        let dist = a.beta0.iter().zip(&b.beta0).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        assert!(dist <= 0.02, "{name}: {dist}");
    }
    let cfg = reduced("I-dense-moderate", 100, 10, 500, 2000, 1);
    assert_eq!(sim::evaluate_oracle_beta(&cfg, 5000).unwrap(), sim::evaluate_oracle_beta(&cfg, 5000).unwrap());
    assert!(sim::evaluate_oracle_beta(&cfg, 10).is_err());
}

#[test]
fn drawn_targets_hit_their_risk_band() {
    let cfg = reduced("I-sparse-strong", 50, 10, 100, 1000, 4);
    let oracle = sim::evaluate_oracle_beta(&cfg, 100_000).unwrap();
    for kind in [XNewKind::Low, XNewKind::Medium, XNewKind::High] {
        let x = sim::make_xnew(kind, &cfg, Some(&oracle), 12).unwrap();
        assert_eq!(x.len(), 51);
        assert_eq!(x[0], 1.0);
        let eta: f64 = x.iter().zip(&oracle.beta0).map(|(a, b)| a * b).sum();
        let risk = Link::Logit.mean(eta);
        assert!((risk - kind.target_risk().unwrap()).abs() <= sim::XNEW_RISK_BAND, "{kind:?}: {risk}");
        assert_eq!(x, sim::make_xnew(kind, &cfg, Some(&oracle), 12).unwrap());
    }
    for kind in [XNewKind::Sparse, XNewKind::Intermediate, XNewKind::Dense] {
        assert_eq!(
            sim::make_xnew(kind, &cfg, None, 1).unwrap(),
            sim::make_xnew(kind, &cfg, Some(&oracle), 99).unwrap()
        );
    }
}

#[test]
fn approximate_sparsity_bounds() {
    let mut r = common::stream(50);
    for _ in 0..200 {
        let len = 1 + (common::normal(&mut r).abs() * 10.0) as usize;
        let b: Vec<f64> = (0..len).map(|_| if common::normal(&mut r) > 0.0 { common::normal(&mut r) } else { 0.0 }).collect();
        let nz = b.iter().filter(|&&v| v != 0.0).count();
        if nz == 0 {
            assert!(sim::approx_sparsity(&b).is_err());
            continue;
        }
        let s = sim::approx_sparsity(&b).unwrap();
        assert!(s >= 1.0 - 1e-12 && s <= nz as f64 + 1e-12);
    }
    let cfg = reduced("II-dense-moderate", 40, 3, 10, 100, 0);
    assert_eq!(cfg.params().scenario, Scenario::II);
    assert_abs_diff_eq!(sim::approx_sparsity(&[2.0, -2.0, 2.0, -2.0]).unwrap(), 4.0, epsilon = 1e-12);
}
