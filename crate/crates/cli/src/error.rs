use std::path::PathBuf;

/// Problems found while reading a data file.
#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: cannot read: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: labeled file has no `y` column")]
    MissingOutcome { path: PathBuf },
    #[error("{path}: unexpected outcome column `y` in unlabeled file")]
    UnexpectedOutcome { path: PathBuf },
    #[error("{path}: column `{column}` is neither `y` nor prefixed `x_` or `s_`")]
    UnknownColumn { path: PathBuf, column: String },
    #[error("{path}: duplicate column `{column}`")]
    DuplicateColumn { path: PathBuf, column: String },
    #[error("{path}: no `x_` columns")]
    NoCovariates { path: PathBuf },
    #[error("column sets differ between files; only in labeled: [{only_labeled}], only in unlabeled: [{only_unlabeled}]")]
    ColumnMismatch { only_labeled: String, only_unlabeled: String },
    #[error("{path}: line {line}: expected {expected} fields, found {found}")]
    Ragged {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("{path}: line {line}, column `{column}`: cannot parse `{value}` as a finite number")]
    NonNumeric {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },
    #[error("{path}: no data rows")]
    Empty { path: PathBuf },
    #[error("invalid data: {0}")]
    Invalid(#[from] sas_core::Error),
}

/// Problems with a saved model file.
#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("malformed model file: {0}")]
    Malformed(String),
    #[error("model schema version {found} is newer than the supported version {supported}")]
    UnsupportedVersion { found: u64, supported: u32 },
    #[error("model is inconsistent: {0}")]
    Inconsistent(String),
}

/// Errors surfaced by the command-line driver; each maps to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Load(#[from] LoadError),
    #[error("data error: {0}")]
    Data(String),
    #[error("model artifact error: {0}")]
    Artifact(#[from] ArtifactError),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Load(_) | CliError::Data(_) | CliError::Artifact(_) | CliError::Io { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<sas_core::Error> for CliError {
    fn from(e: sas_core::Error) -> Self {
        match e {
            sas_core::Error::Config(_) => CliError::Config(e.to_string()),
            sas_core::Error::Numerical(_) => CliError::Numerical(e.to_string()),
            sas_core::Error::Domain(_) | sas_core::Error::Shape { .. } => CliError::Data(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
