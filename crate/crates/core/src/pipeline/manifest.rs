//! Bug manifests: which hunks to repair and how to build and test them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::context::LineRange;
use crate::generate::{EnsembleConfig, DEFAULT_BEAM_SIZE, DEFAULT_CHECKPOINTS};
use crate::hunk::HunkId;
use crate::lang::Language;
use crate::retrieval::{DEFAULT_THRESHOLD, DEFAULT_TOP_R};
use crate::tokenize::TokenBudget;
use crate::validate::{CommandSpec, HunkSite, DEFAULT_FLAKY_REPEATS, DEFAULT_TIMEOUT};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("manifest is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported manifest schema_version {0} (expected {MANIFEST_VERSION})")]
    Version(u32),
    #[error("bug {bug}: {reason}")]
    Bug { bug: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub bugs: Vec<BugManifest>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HunkSpec {
    /// Relative to the bug root.
    pub file: String,
    pub start: usize,
    pub length: usize,
}

impl HunkSpec {
    pub fn range(&self) -> LineRange {
        LineRange::new(self.start, self.length)
    }

    pub fn id(&self) -> HunkId {
        HunkId::new(self.file.clone(), self.start)
    }

    pub fn site(&self) -> HunkSite {
        HunkSite::new(self.file.clone(), self.range())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorSpec {
    /// Replay file, relative to the manifest.
    Replay(PathBuf),
    Remote {
        endpoint: String,
        #[serde(default = "default_remote_timeout")]
        timeout_secs: f64,
    },
}

fn default_remote_timeout() -> f64 {
    120.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub r: usize,
    pub threshold: f64,
    pub k: usize,
    pub t: usize,
    pub input_budget: usize,
    pub output_budget: usize,
}

impl Default for Params {
    fn default() -> Self {
        let budget = TokenBudget::default();
        Params {
            r: DEFAULT_TOP_R,
            threshold: DEFAULT_THRESHOLD,
            k: DEFAULT_CHECKPOINTS,
            t: DEFAULT_BEAM_SIZE,
            input_budget: budget.input_limit,
            output_budget: budget.output_limit,
        }
    }
}

impl Params {
    pub fn ensemble(&self) -> EnsembleConfig {
        EnsembleConfig { k: self.k, t: self.t }
    }

    pub fn budget(&self) -> TokenBudget {
        TokenBudget { input_limit: self.input_budget, output_limit: self.output_budget }
    }
}

/// Command-line overrides applied on top of every bug's parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub r: Option<usize>,
    pub threshold: Option<f64>,
    pub t: Option<usize>,
    pub k: Option<usize>,
    pub timeout_secs: Option<f64>,
}

fn default_workdir() -> PathBuf {
    PathBuf::from(".")
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT.as_secs_f64()
}

fn default_repeats() -> usize {
    DEFAULT_FLAKY_REPEATS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BugManifest {
    pub id: String,
    pub language: Language,
    /// Project directory, relative to the manifest.
    pub root: PathBuf,
    pub hunks: Vec<HunkSpec>,
    #[serde(default)]
    pub build: Option<String>,
    pub test: String,
    #[serde(default = "default_workdir")]
    pub workdir: PathBuf,
    #[serde(default)]
    pub env: BTreeMap<String, String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_repeats")]
    pub flaky_repeats: usize,
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub params: Params,
    /// Developer fix per hunk id; hunks not listed keep their source.
    #[serde(default)]
    pub reference: Option<BTreeMap<HunkId, String>>,
}

impl BugManifest {
    pub fn hunk_ids(&self) -> Vec<HunkId> {
        self.hunks.iter().map(HunkSpec::id).collect()
    }

    pub fn sites(&self) -> Vec<HunkSite> {
        self.hunks.iter().map(HunkSpec::site).collect()
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    pub fn command_spec(&self) -> CommandSpec {
        CommandSpec {
            build: self.build.clone(),
            test: self.test.clone(),
            workdir: self.workdir.clone(),
            env: self.env.clone(),
            timeout: self.timeout(),
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        let p = &mut self.params;
        p.r = o.r.unwrap_or(p.r);
        p.threshold = o.threshold.unwrap_or(p.threshold);
        p.t = o.t.unwrap_or(p.t);
        p.k = o.k.unwrap_or(p.k);
        self.timeout_secs = o.timeout_secs.unwrap_or(self.timeout_secs);
    }

    fn check(&self) -> Result<(), String> {
        let id_ok = !self.id.is_empty()
            && self.id.chars().all(|c| c.is_ascii_alphanumeric() || "._-".contains(c))
            && !self.id.starts_with('.');
        if !id_ok {
            return Err("id must be non-empty and use only letters, digits, '.', '_' and '-'".into());
        }
        if self.hunks.is_empty() {
            return Err("at least one hunk is required".into());
        }
        if self.hunks.iter().any(|h| h.start == 0) {
            return Err("hunk start lines are 1-based".into());
        }
        let p = &self.params;
        if p.k == 0 || p.t == 0 || p.input_budget == 0 || p.output_budget == 0 {
            return Err("k, t and both budgets must be positive".into());
        }
        if !(0.0..=1.0).contains(&p.threshold) {
            return Err(format!("threshold {} is outside [0, 1]", p.threshold));
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(format!("timeout_secs {} must be positive", self.timeout_secs));
        }
        if self.flaky_repeats < 2 {
            return Err(format!("flaky_repeats {} must be at least 2", self.flaky_repeats));
        }
        if self.workdir.is_absolute() || self.hunks.iter().any(|h| Path::new(&h.file).is_absolute()) {
            return Err("workdir and hunk files must be relative to the bug root".into());
        }
        Ok(())
    }
}

impl Manifest {
    /// Parses and checks a manifest. Relative paths are resolved against
    /// `base` and every hunk file must exist.
    pub fn parse(text: &str, base: &Path) -> Result<Manifest, ManifestError> {
        let mut manifest: Manifest = serde_json::from_str(text)?;
        if manifest.schema_version != MANIFEST_VERSION {
            return Err(ManifestError::Version(manifest.schema_version));
        }
        let mut seen = std::collections::BTreeSet::new();
        for bug in &mut manifest.bugs {
            let fail = |reason: String| ManifestError::Bug { bug: bug.id.clone(), reason };
            bug.check().map_err(fail)?;
            if !seen.insert(bug.id.clone()) {
                return Err(fail("duplicate bug id".into()));
            }
            bug.root = base.join(&bug.root);
            if let GeneratorSpec::Replay(path) = &mut bug.generator {
                *path = base.join(&*path);
            }
            for hunk in &bug.hunks {
                let path = bug.root.join(&hunk.file);
                if !path.is_file() {
                    return Err(fail(format!("hunk file {} does not exist", path.display())));
                }
            }
        }
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Manifest, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io { path: path.into(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Manifest::parse(&text, base)
    }

    pub fn bug(&self, id: &str) -> Option<&BugManifest> {
        self.bugs.iter().find(|b| b.id == id)
    }
}
