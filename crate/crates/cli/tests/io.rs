use std::path::{Path, PathBuf};

use proptest::prelude::*;
use sas_cli::error::{ArtifactError, LoadError};
use sas_cli::{commands, load_dataset, write_dataset, LoadedDataset, ModelArtifact, RunConfig, SCHEMA_VERSION};
use sas_core::{Matrix, SemiSupervisedData};

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn pair(labeled: &str, unlabeled: &str) -> (tempfile::TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "l.csv", labeled);
    let b = write(dir.path(), "u.csv", unlabeled);
    (dir, a, b)
}

const LABELED: &str = "y,x_1,x_2,s_1\n1,0.5,-1,2\n0,1.5,0,0.25\n1,-2,3,1\n";
const UNLABELED: &str = "x_1,x_2,s_1\n0,0,0\n1,1,1\n2,2,2\n3,3,3\n4,4,4\n";

#[test]
fn toy_files_load_with_an_intercept() {
    let (_d, l, u) = pair(LABELED, UNLABELED);
    let ds = load_dataset(&l, &u).unwrap();
    assert_eq!((ds.data.n_labeled(), ds.data.n_total()), (3, 8));
    assert_eq!(ds.x_columns, vec!["x_1", "x_2"]);
    assert_eq!(ds.s_columns, vec!["s_1"]);
    assert!(ds.data.x().column(0).iter().all(|&v| v == 1.0));
    assert_eq!(ds.data.x().row(1), &[1.0, 1.5, 0.0]);
    assert_eq!(ds.data.w().row(4), &[1.0, 1.0, 1.0, 1.0]);
    assert_eq!(ds.data.y(), &[1.0, 0.0, 1.0]);
}

#[test]
fn column_order_follows_the_labeled_header() {
    let (_d, l, u) = pair(LABELED, "s_1,x_2,x_1\n9,8,7\n");
    let ds = load_dataset(&l, &u).unwrap();
    assert_eq!(ds.data.w().row(3), &[1.0, 7.0, 8.0, 9.0]);
}

#[test]
fn schema_violations_are_typed() {
    let cases: Vec<(&str, &str, fn(&LoadError) -> bool)> = vec![
        (LABELED, "y,x_1,x_2,s_1\n1,0,0,0\n", |e| matches!(e, LoadError::UnexpectedOutcome { .. })),
        ("x_1,x_2,s_1\n0,0,0\n", UNLABELED, |e| matches!(e, LoadError::MissingOutcome { .. })),
        (LABELED, "x_1,x_3,s_1\n0,0,0\n", |e| matches!(e, LoadError::ColumnMismatch { .. })),
        (LABELED, "x_1,x_2,s_1\n0,0\n", |e| matches!(e, LoadError::Ragged { line: 2, expected: 3, found: 2, .. })),
        (LABELED, "x_1,x_2,s_1\n0,abc,0\n", |e| matches!(e, LoadError::NonNumeric { line: 2, .. })),
        (LABELED, "x_1,x_2,s_1\n0,NaN,0\n", |e| matches!(e, LoadError::NonNumeric { .. })),
        (LABELED, "x_1,x_2,s_1\n", |e| matches!(e, LoadError::Empty { .. })),
        ("y,x_1,z\n1,0,0\n", "x_1,z\n0,0\n", |e| matches!(e, LoadError::UnknownColumn { .. })),
        ("y,x_1,x_1\n1,0,0\n", "x_1,x_1\n0,0\n", |e| matches!(e, LoadError::DuplicateColumn { .. })),
        ("y,s_1\n1,0\n", "s_1\n0\n", |e| matches!(e, LoadError::NoCovariates { .. })),
    ];
    for (lab, unl, check) in cases {
        let (_d, l, u) = pair(lab, unl);
        let err = load_dataset(&l, &u).unwrap_err();
        assert!(check(&err), "{lab:?} / {unl:?}: {err}");
    }
}

#[test]
fn error_messages_name_the_problem() {
    let (_d, l, u) = pair(LABELED, "y,x_1,x_2,s_1\n1,0,0,0\n");
    assert!(load_dataset(&l, &u).unwrap_err().to_string().contains("unexpected outcome column"));
    let (_d, l, u) = pair(LABELED, "x_1,x_3,s_1,s_2\n0,0,0,0\n");
    let msg = load_dataset(&l, &u).unwrap_err().to_string();
    assert!(msg.contains("only in labeled: [x_2]") && msg.contains("only in unlabeled: [s_2, x_3]"), "{msg}");
    let (_d, l, u) = pair(LABELED, "x_1,x_2,s_1\n0,abc,0\n");
    let msg = load_dataset(&l, &u).unwrap_err().to_string();
    assert!(msg.contains("line 2") && msg.contains("`x_2`") && msg.contains("abc"), "{msg}");
}

fn dataset(n: usize, unl: usize, p: usize, q: usize, vals: &[f64]) -> LoadedDataset {
    let mut it = vals.iter().cycle();
    let mut next = || *it.next().unwrap();
    let x = Matrix::from_fn(n + unl, p + 1, |_, j| if j == 0 { 1.0 } else { next() });
    let s = Matrix::from_fn(n + unl, q, |_, _| next());
    let y: Vec<f64> = (0..n).map(|_| next()).collect();
    LoadedDataset {
        data: SemiSupervisedData::new(x.slice_rows(0, n), s.slice_rows(0, n), y, x.slice_rows(n, n + unl), s.slice_rows(n, n + unl))
            .unwrap(),
        x_columns: (1..=p).map(|j| format!("x_{j}")).collect(),
        s_columns: (1..=q).map(|j| format!("s_{j}")).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn csv_round_trip_is_exact(
        n in 1usize..6, unl in 1usize..6, p in 1usize..4, q in 0usize..3,
        vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 1..40),
    ) {
        let ds = dataset(n, unl, p, q, &vals);
        let dir = tempfile::tempdir().unwrap();
        let (l, u) = (dir.path().join("l.csv"), dir.path().join("u.csv"));
        write_dataset(&ds, &l, &u).unwrap();
        let back = load_dataset(&l, &u).unwrap();
        prop_assert_eq!(&back.data, &ds.data);
        prop_assert_eq!(&back.x_columns, &ds.x_columns);
        prop_assert_eq!(&back.s_columns, &ds.s_columns);
    }
}

fn fitted_artifact() -> (tempfile::TempDir, ModelArtifact) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_json(&format!(
        r#"{{"scenario": {{"preset": "II-sparse-strong", "p": 40, "q": 5, "n": 120, "N": 600}}, "seed": 3, "out": "{}"}}"#,
        dir.path().display()
    ))
    .unwrap();
    commands::cmd_simulate(&cfg).unwrap();
    let cfg = RunConfig::from_json(&format!(
        r#"{{"data": {{"labeled": "{0}/labeled.csv", "unlabeled": "{0}/unlabeled.csv"}},
            "folds": 3, "lambda_gamma": {{"rate": 1.0}}, "lambda_beta": {{"rate": 1.0}},
            "x_new": [{{"id": "first", "row": 0}}], "out": "{0}/fit"}}"#,
        dir.path().display()
    ))
    .unwrap();
    let artifact = commands::cmd_fit(&cfg).unwrap();
    (dir, artifact)
}

#[test]
fn artifact_round_trip_is_byte_identical() {
    let (dir, artifact) = fitted_artifact();
    let text = std::fs::read_to_string(dir.path().join("fit/model.json")).unwrap();
    assert_eq!(text, artifact.to_json());
    let back = ModelArtifact::from_json(&text).unwrap();
    assert_eq!(back, artifact);
    assert_eq!(back.to_json(), text);
    assert_eq!(back.schema_version, SCHEMA_VERSION);
    assert_eq!(back.crossfit.folds, 3);
    assert_eq!(back.crossfit.pairs.len(), 3);
    assert_eq!(back.fingerprint.n_total, 600);
}

#[test]
fn artifact_rejects_future_and_malformed_files() {
    let (_dir, artifact) = fitted_artifact();
    let mut v: serde_json::Value = serde_json::from_str(&artifact.to_json()).unwrap();
    v["schema_version"] = serde_json::json!(SCHEMA_VERSION + 1);
    assert!(matches!(
        ModelArtifact::from_json(&v.to_string()),
        Err(ArtifactError::UnsupportedVersion { found, .. }) if found == (SCHEMA_VERSION + 1) as u64
    ));
    v["schema_version"] = serde_json::json!(SCHEMA_VERSION);
    v["extra"] = serde_json::json!(1);
    assert!(matches!(ModelArtifact::from_json(&v.to_string()), Err(ArtifactError::Malformed(_))));
    let mut short = artifact.clone();
    short.beta.pop();
    assert!(matches!(ModelArtifact::from_json(&short.to_json()), Err(ArtifactError::Inconsistent(_))));
    assert!(matches!(ModelArtifact::from_json("{"), Err(ArtifactError::Malformed(_))));
}

#[test]
fn config_rejects_unknown_keys_and_bad_values() {
    assert!(RunConfig::from_json(r#"{"seed": 1, "bogus": 2}"#).is_err());
    assert!(RunConfig::from_json(r#"{"lambda_beta": {"cv": {"grid_len": 5, "typo": 1}}}"#).is_err());
    let cfg = RunConfig::from_json(r#"{"lambda_beta": {"cv": {"grid_len": 5}}, "link": "probit"}"#).unwrap();
    let s = cfg.settings().unwrap();
    assert_eq!(s.lambda_beta, sas_core::LambdaRule::Cv { grid_len: 5, span: 10.0, folds: 5 });
    assert_eq!(s.link, sas_core::Link::Probit);
    for bad in [r#"{"link": "cloglog"}"#, r#"{"folds": 2}"#, r#"{"alpha": 1.5}"#, r#"{"solver": {"tolerance": -1}}"#] {
        let cfg = RunConfig::from_json(bad).unwrap();
        assert_eq!(cfg.settings().unwrap_err().exit_code(), 2, "{bad}");
    }
    assert!(RunConfig::from_json(r#"{"replicates": 1}"#).unwrap().replicates().is_err());
    assert!(RunConfig::from_json(r#"{"targets": ["Q"]}"#).unwrap().target_kinds().is_err());
    assert!(RunConfig::from_json(r#"{"workers": 0}"#).unwrap().workers().is_err());
}
