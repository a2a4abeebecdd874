//! CSV data files: a labeled file with `y`, `x_*` and `s_*` columns and an
//! unlabeled file with the same `x_*` and `s_*` columns and no `y`.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use sas_core::{Matrix, SemiSupervisedData};

use crate::error::{CliError, CliResult, LoadError};

/// Semi-supervised data with its column names (intercept excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub data: SemiSupervisedData,
    pub x_columns: Vec<String>,
    pub s_columns: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Outcome,
    Covariate,
    Surrogate,
}

struct Header {
    names: Vec<String>,
    roles: Vec<Role>,
}

impl Header {
    fn parse(path: &Path, record: &csv::StringRecord) -> Result<Self, LoadError> {
        let mut seen = BTreeSet::new();
        let mut names = Vec::with_capacity(record.len());
        let mut roles = Vec::with_capacity(record.len());
        for name in record.iter() {
            let role = if name == "y" {
                Role::Outcome
            } else if name.starts_with("x_") {
                Role::Covariate
            } else if name.starts_with("s_") {
                Role::Surrogate
            } else {
                return Err(LoadError::UnknownColumn {
                    path: path.to_path_buf(),
                    column: name.to_string(),
                });
            };
            if !seen.insert(name.to_string()) {
                return Err(LoadError::DuplicateColumn {
                    path: path.to_path_buf(),
                    column: name.to_string(),
                });
            }
            names.push(name.to_string());
            roles.push(role);
        }
        Ok(Header { names, roles })
    }

    fn columns(&self, role: Role) -> Vec<String> {
        self.names
            .iter()
            .zip(&self.roles)
            .filter(|(_, r)| **r == role)
            .map(|(n, _)| n.clone())
            .collect()
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Header plus parsed numeric rows.
struct Table {
    header: Header,
    rows: Vec<Vec<f64>>,
}

fn read_table(path: &Path) -> Result<Table, LoadError> {
    let read_err = |source| LoadError::Read {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(read_err)?;
    let header = Header::parse(path, reader.headers().map_err(read_err)?)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(read_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.names.len() {
            return Err(LoadError::Ragged {
                path: path.to_path_buf(),
                line,
                expected: header.names.len(),
                found: record.len(),
            });
        }
        let mut row = Vec::with_capacity(record.len());
        for (cell, name) in record.iter().zip(&header.names) {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(LoadError::NonNumeric {
                        path: path.to_path_buf(),
                        line,
                        column: name.clone(),
                        value: cell.to_string(),
                    })
                }
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(LoadError::Empty { path: path.to_path_buf() });
    }
    Ok(Table { header, rows })
}

/// Extracts `columns` (by name) from `table`, optionally with a leading
/// intercept column of ones.
fn block(table: &Table, columns: &[String], intercept: bool) -> Matrix {
    let idx: Vec<usize> = columns.iter().map(|c| table.header.position(c).expect("column present")).collect();
    let width = idx.len() + intercept as usize;
    Matrix::from_fn(table.rows.len(), width, |i, j| {
        if intercept {
            if j == 0 {
                1.0
            } else {
                table.rows[i][idx[j - 1]]
            }
        } else {
            table.rows[i][idx[j]]
        }
    })
}

fn symmetric_difference(a: &[String], b: &[String]) -> Option<(String, String)> {
    let sa: BTreeSet<&String> = a.iter().collect();
    let sb: BTreeSet<&String> = b.iter().collect();
    if sa == sb {
        return None;
    }
    let join = |v: Vec<&&String>| v.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ");
    Some((join(sa.difference(&sb).collect()), join(sb.difference(&sa).collect())))
}

/// Reads the labeled and unlabeled files. Column order follows the labeled
/// file's header within each prefix; an intercept column is prepended.
pub fn load_dataset(labeled_path: &Path, unlabeled_path: &Path) -> Result<LoadedDataset, LoadError> {
    let labeled = read_table(labeled_path)?;
    let unlabeled = read_table(unlabeled_path)?;
    let Some(y_col) = labeled.header.position("y") else {
        return Err(LoadError::MissingOutcome {
            path: labeled_path.to_path_buf(),
        });
    };
    if unlabeled.header.position("y").is_some() {
        return Err(LoadError::UnexpectedOutcome {
            path: unlabeled_path.to_path_buf(),
        });
    }
    let x_columns = labeled.header.columns(Role::Covariate);
    let s_columns = labeled.header.columns(Role::Surrogate);
    let mut lab_cols = x_columns.clone();
    lab_cols.extend(s_columns.iter().cloned());
    let mut unl_cols = unlabeled.header.columns(Role::Covariate);
    unl_cols.extend(unlabeled.header.columns(Role::Surrogate));
    if let Some((only_labeled, only_unlabeled)) = symmetric_difference(&lab_cols, &unl_cols) {
        return Err(LoadError::ColumnMismatch {
            only_labeled,
            only_unlabeled,
        });
    }
    if x_columns.is_empty() {
        return Err(LoadError::NoCovariates {
            path: labeled_path.to_path_buf(),
        });
    }
    let y: Vec<f64> = labeled.rows.iter().map(|r| r[y_col]).collect();
    let data = SemiSupervisedData::new(
        block(&labeled, &x_columns, true),
        block(&labeled, &s_columns, false),
        y,
        block(&unlabeled, &x_columns, true),
        block(&unlabeled, &s_columns, false),
    )?;
    Ok(LoadedDataset {
        data,
        x_columns,
        s_columns,
    })
}

/// Reads covariate rows for prediction. The file must carry exactly the
/// given `x_*` columns (any order); `y` and `s_*` columns are ignored.
pub fn load_covariates(path: &Path, x_columns: &[String]) -> Result<Matrix, LoadError> {
    let table = read_table(path)?;
    let found = table.header.columns(Role::Covariate);
    if let Some((only_model, only_file)) = symmetric_difference(x_columns, &found) {
        return Err(LoadError::ColumnMismatch {
            only_labeled: only_model,
            only_unlabeled: only_file,
        });
    }
    Ok(block(&table, x_columns, true))
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> CliResult<()> {
    let io = |e| CliError::io(path, e);
    let mut out = std::io::BufWriter::new(File::create(path).map_err(io)?);
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", cells.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Writes the two files read by [`load_dataset`]. Values use the shortest
/// decimal form that parses back to the same `f64`.
pub fn write_dataset(dataset: &LoadedDataset, labeled_path: &Path, unlabeled_path: &Path) -> CliResult<()> {
    let data = &dataset.data;
    let p = data.n_covariates();
    let q = data.n_surrogates();
    if dataset.x_columns.len() != p || dataset.s_columns.len() != q {
        return Err(CliError::Data("column names do not match the data dimensions".into()));
    }
    let n = data.n_labeled();
    let row = |i: usize| -> Vec<f64> { data.w().row(i)[1..].to_vec() };
    let mut header = vec![String::from("y")];
    header.extend(dataset.x_columns.iter().cloned());
    header.extend(dataset.s_columns.iter().cloned());
    write_rows(
        labeled_path,
        &header,
        (0..n).map(|i| {
            let mut r = vec![data.y()[i]];
            r.extend(row(i));
            r
        }),
    )?;
    write_rows(unlabeled_path, &header[1..], (n..data.n_total()).map(row))
}

/// Default column names `x_1..x_p` and `s_1..s_q`.
pub fn default_names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|j| format!("{prefix}_{j}")).collect()
}

/// Paths of the two files inside an output directory.
pub fn dataset_paths(dir: &Path) -> (PathBuf, PathBuf) {
    (dir.join("labeled.csv"), dir.join("unlabeled.csv"))
}
