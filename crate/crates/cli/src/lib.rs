//! Data files, configuration, model artifacts, the replication runner and the
//! command-line driver around `sas-core`.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod output;
pub mod runner;

pub use artifact::{ModelArtifact, SCHEMA_VERSION};
pub use config::RunConfig;
pub use dataset::{load_dataset, write_dataset, LoadedDataset};
pub use error::{ArtifactError, CliError, CliResult, LoadError};
