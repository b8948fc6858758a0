//! Read-only view of what retrieval feeds the prompt for each hunk.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::manifest::Manifest;
use super::repair::{prepare_hunks, read_sources};
use super::PipelineError;
use crate::context::ContextKind;
use crate::hunk::HunkId;
use crate::par::Execution;
use crate::retrieval::RetrievedLine;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HunkRetrieval {
    pub hunk: HunkId,
    pub context: ContextKind,
    pub retrieved: Vec<RetrievedLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalDump {
    pub bug: String,
    pub r: usize,
    pub threshold: f64,
    pub hunks: Vec<HunkRetrieval>,
}

pub fn retrieval_dump(manifest: &Manifest, bug_id: &str) -> Result<RetrievalDump, PipelineError> {
    let bug = manifest.bug(bug_id).ok_or_else(|| PipelineError::UnknownBug(bug_id.to_string()))?;
    let sources = read_sources(bug)?;
    let hunks = prepare_hunks(bug, &sources, Execution::default())?
        .into_iter()
        .map(|h| HunkRetrieval { hunk: h.id, context: h.log.context, retrieved: h.log.retrieved })
        .collect();
    Ok(RetrievalDump { bug: bug.id.clone(), r: bug.params.r, threshold: bug.params.threshold, hunks })
}

impl fmt::Display for RetrievalDump {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "bug {} (r={}, threshold={})", self.bug, self.r, self.threshold)?;
        for h in &self.hunks {
            let context = match h.context {
                ContextKind::EnclosingFunction => "function",
                ContextKind::Window => "window",
            };
            writeln!(f, "{} [{context} context] {} line(s)", h.hunk, h.retrieved.len())?;
            for line in &h.retrieved {
                writeln!(f, "  {:.6}  L{:<5} {}", line.similarity, line.line_no, line.text)?;
            }
        }
        Ok(())
    }
}
