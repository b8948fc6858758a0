//! End-to-end commands: mining, repair, retrieval dumps and statistics.

pub mod manifest;
pub mod mine;
pub mod repair;
pub mod retrieve;
pub mod stats;

use std::path::{Path, PathBuf};

pub use manifest::{BugManifest, Manifest, ManifestError, Overrides};
pub use mine::{mine_dir, MineSummary};
pub use repair::{repair_all, repair_bug, summarize, RepairOptions, RepairReport, RepairSummary};
pub use retrieve::{retrieval_dump, RetrievalDump};
pub use stats::{stats_dir, Stats};

/// Environment variable naming the directory for scratch copies.
pub const SANDBOX_DIR_ENV: &str = "MENDKIT_SANDBOX_DIR";

/// Scratch location from the environment, if set.
pub fn sandbox_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(SANDBOX_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Input(String),
    #[error("no bug `{0}` in the manifest")]
    UnknownBug(String),
    #[error(transparent)]
    Context(#[from] crate::context::ContextError),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Generate(#[from] crate::generate::GenerateError),
    #[error(transparent)]
    Harness(#[from] crate::validate::HarnessError),
    #[error(transparent)]
    Validate(#[from] crate::validate::ValidateError),
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.to_path_buf(), source }
    }
}
