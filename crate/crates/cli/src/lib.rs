//! Reproduction pipeline around the `tsecon` library: a TOML-configured run
//! that loads the monthly price snapshot, executes every analysis stage
//! (descriptives, unit-root battery, VAR order selection, cointegration,
//! ARDL bounds, augmented-lag causality, structural analysis), and writes a
//! report bundle of CSV artifacts plus a manifest with checksums.
//!
//! The binary is a thin wrapper; everything here is a library so the whole
//! pipeline can be driven in-process (tests, tuning harnesses).

pub mod config;
pub mod fetch;
pub mod pipeline;
pub mod plots;
pub mod report;
pub mod stages;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("library: {0}")]
    Library(#[from] tsecon::Error),
    #[error("fetched content is not delimited text: {0}")]
    SchemaError(String),
    #[error("fetch: {0}")]
    Fetch(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}
