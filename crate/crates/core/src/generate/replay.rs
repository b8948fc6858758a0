//! Replay backend: serves recorded beams from a JSON document mapping
//! hunk id → one array of `{text, score}` per checkpoint, in beam order.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{check_beam, GenerateError, GenerationRequest, Generator, RawCandidate};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReplayFile {
    pub beams: BTreeMap<String, Vec<Vec<RawCandidate>>>,
}

impl ReplayFile {
    pub fn from_json(text: &str) -> Result<Self, GenerateError> {
        let file: ReplayFile = serde_json::from_str(text).map_err(|e| GenerateError::Malformed(e.to_string()))?;
        for (hunk, beams) in &file.beams {
            for (i, beam) in beams.iter().enumerate() {
                check_beam(beam, usize::MAX)
                    .map_err(|e| GenerateError::Malformed(format!("{hunk} checkpoint {}: {e}", i + 1)))?;
            }
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, GenerateError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GenerateError::Unavailable(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// One generator per checkpoint, `k` in total.
    pub fn generators(self: &Arc<Self>, k: usize) -> Vec<Box<dyn Generator>> {
        (0..k)
            .map(|_| Box::new(ReplayGenerator { file: Arc::clone(self) }) as Box<dyn Generator>)
            .collect()
    }
}

/// Closed-world replay: a hunk or checkpoint with no recording yields an
/// empty beam.
#[derive(Debug, Clone)]
pub struct ReplayGenerator {
    file: Arc<ReplayFile>,
}

impl ReplayGenerator {
    pub fn new(file: Arc<ReplayFile>) -> Self {
        ReplayGenerator { file }
    }
}

impl Generator for ReplayGenerator {
    fn propose(&self, request: &GenerationRequest<'_>) -> Result<Vec<RawCandidate>, GenerateError> {
        let beam = self
            .file
            .beams
            .get(&request.hunk.to_string())
            .and_then(|beams| beams.get(request.checkpoint.wrapping_sub(1)));
        Ok(beam.map(|b| b.iter().take(request.beam_size).cloned().collect()).unwrap_or_default())
    }
}
