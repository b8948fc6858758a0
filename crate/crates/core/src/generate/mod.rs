//! Patch generators and checkpoint-ensemble fan-out.
//!
//! A generator stands for one model checkpoint: given a prompt it returns
//! up to `t` candidates from its beam, best first. Real checkpoints live
//! behind the HTTP protocol in [`remote`]; [`replay`] serves recorded
//! beams from a JSON file.

pub mod remote;
pub mod replay;

use serde::{Deserialize, Serialize};

use crate::encode::Prompt;
use crate::hunk::HunkId;
use crate::par::{self, Execution};
use crate::text::normalize_ws;

pub use remote::RemoteGenerator;
pub use replay::{ReplayFile, ReplayGenerator};

pub const DEFAULT_CHECKPOINTS: usize = 5;
pub const DEFAULT_BEAM_SIZE: usize = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerateError {
    #[error("generator backend unavailable: {0}")]
    Unavailable(String),
    #[error("malformed generator response: {0}")]
    Malformed(String),
    #[error("invalid ensemble configuration: {0}")]
    Config(String),
}

/// One beam entry. Empty text means "delete the hunk". Scores are
/// sequence log-probabilities: higher is better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCandidate {
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePatch {
    pub text: String,
    pub normalized: String,
    /// 1-based checkpoint index.
    pub checkpoint: usize,
    /// 1-based position in that checkpoint's beam.
    pub rank: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// Number of checkpoints.
    pub k: usize,
    /// Beam size per checkpoint.
    pub t: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig { k: DEFAULT_CHECKPOINTS, t: DEFAULT_BEAM_SIZE }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub hunk: &'a HunkId,
    pub prompt: &'a Prompt,
    pub beam_size: usize,
    /// 1-based checkpoint index.
    pub checkpoint: usize,
}

/// One checkpoint's beam search. Implementations must be safe to call
/// concurrently on distinct prompts.
pub trait Generator: Send + Sync {
    fn propose(&self, request: &GenerationRequest<'_>) -> Result<Vec<RawCandidate>, GenerateError>;
}

/// Checks the beam contract: at most `beam_size` entries, scores
/// non-increasing.
pub fn check_beam(candidates: &[RawCandidate], beam_size: usize) -> Result<(), GenerateError> {
    if candidates.len() > beam_size {
        return Err(GenerateError::Malformed(format!("{} candidates for beam size {beam_size}", candidates.len())));
    }
    if let Some(w) = candidates.windows(2).find(|w| w[1].score > w[0].score) {
        return Err(GenerateError::Malformed(format!("scores increase from {} to {}", w[0].score, w[1].score)));
    }
    if let Some(c) = candidates.iter().find(|c| !c.score.is_finite()) {
        return Err(GenerateError::Malformed(format!("non-finite score {}", c.score)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnsembleOutput {
    /// One list per checkpoint, in checkpoint order, each in beam order.
    pub per_checkpoint: Vec<Vec<CandidatePatch>>,
    /// Backends that failed; their lists are empty.
    pub warnings: Vec<String>,
}

impl EnsembleOutput {
    pub fn total(&self) -> usize {
        self.per_checkpoint.iter().map(Vec::len).sum()
    }
}

/// Queries every checkpoint for `hunk` and tags each candidate with its
/// checkpoint index and beam position. Checkpoints may be queried
/// concurrently; output order does not depend on completion order.
pub fn ensemble_generate(
    backends: &[Box<dyn Generator>],
    hunk: &HunkId,
    prompt: &Prompt,
    cfg: EnsembleConfig,
    exec: Execution,
) -> Result<EnsembleOutput, GenerateError> {
    if cfg.k == 0 || cfg.t == 0 {
        return Err(GenerateError::Config(format!("k={} t={} must both be positive", cfg.k, cfg.t)));
    }
    if backends.len() != cfg.k {
        return Err(GenerateError::Config(format!("{} backends for k={}", backends.len(), cfg.k)));
    }
    let results = par::map_range(exec, cfg.k, |i| {
        let request = GenerationRequest { hunk, prompt, beam_size: cfg.t, checkpoint: i + 1 };
        backends[i].propose(&request).and_then(|c| check_beam(&c, cfg.t).map(|_| c))
    });
    let mut out = EnsembleOutput::default();
    for (i, result) in results.into_iter().enumerate() {
        let checkpoint = i + 1;
        match result {
            Ok(raw) => out.per_checkpoint.push(
                raw.into_iter()
                    .enumerate()
                    .map(|(pos, c)| CandidatePatch {
                        normalized: normalize_ws(&c.text),
                        text: c.text,
                        checkpoint,
                        rank: pos + 1,
                        score: c.score,
                    })
                    .collect(),
            ),
            Err(err) => {
                let warning = format!("checkpoint {checkpoint} failed for {hunk}: {err}");
                tracing::warn!("{warning}");
                out.warnings.push(warning);
                out.per_checkpoint.push(Vec::new());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(Vec<RawCandidate>);
    impl Generator for Fixed {
        fn propose(&self, req: &GenerationRequest<'_>) -> Result<Vec<RawCandidate>, GenerateError> {
            Ok(self.0.iter().take(req.beam_size).cloned().collect())
        }
    }

    struct Down;
    impl Generator for Down {
        fn propose(&self, _: &GenerationRequest<'_>) -> Result<Vec<RawCandidate>, GenerateError> {
            Err(GenerateError::Unavailable("offline".into()))
        }
    }

    fn raw(text: &str, score: f64) -> RawCandidate {
        RawCandidate { text: text.into(), score }
    }

    fn prompt() -> Prompt {
        crate::encode::build_prompt(
            "Java",
            "a=1;",
            &[],
            &crate::context::ContextSpan {
                kind: crate::context::ContextKind::Window,
                range: crate::context::LineRange::new(1, 1),
                text: "a=1;".into(),
            },
        )
    }

    #[test]
    fn single_checkpoint_passthrough() {
        let backends: Vec<Box<dyn Generator>> = vec![Box::new(Fixed(vec![raw("a", -0.1), raw(" b  c", -0.2)]))];
        let id = HunkId::new("A.java", 3);
        let out = ensemble_generate(&backends, &id, &prompt(), EnsembleConfig { k: 1, t: 5 }, Execution::Sequential).unwrap();
        assert_eq!(out.per_checkpoint.len(), 1);
        let c = &out.per_checkpoint[0];
        assert_eq!((c[1].rank, c[1].checkpoint, c[1].normalized.as_str()), (2, 1, "b c"));
    }

    #[test]
    fn two_checkpoints_give_two_t_candidates() {
        let backends: Vec<Box<dyn Generator>> = vec![
            Box::new(Fixed(vec![raw("a", -0.1), raw("b", -0.2)])),
            Box::new(Fixed(vec![raw("c", -0.3), raw("d", -0.4)])),
        ];
        let id = HunkId::new("A.java", 3);
        let out = ensemble_generate(&backends, &id, &prompt(), EnsembleConfig { k: 2, t: 2 }, Execution::Parallel).unwrap();
        assert_eq!(out.total(), 4);
        assert_eq!(out.per_checkpoint[1][0].text, "c");
        assert_eq!(out.per_checkpoint[1][0].checkpoint, 2);
    }

    #[test]
    fn failed_backend_yields_empty_list_and_warning() {
        let backends: Vec<Box<dyn Generator>> = vec![Box::new(Down), Box::new(Fixed(vec![raw("x", 0.0)]))];
        let id = HunkId::new("A.java", 3);
        let out = ensemble_generate(&backends, &id, &prompt(), EnsembleConfig { k: 2, t: 3 }, Execution::Parallel).unwrap();
        assert!(out.per_checkpoint[0].is_empty());
        assert_eq!(out.per_checkpoint[1].len(), 1);
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn backend_count_must_match_k() {
        let backends: Vec<Box<dyn Generator>> = vec![Box::new(Down)];
        let id = HunkId::new("A.java", 3);
        assert!(matches!(
            ensemble_generate(&backends, &id, &prompt(), EnsembleConfig::default(), Execution::Sequential),
            Err(GenerateError::Config(_))
        ));
    }

    #[test]
    fn beam_contract() {
        assert!(check_beam(&[raw("a", -1.0), raw("b", -0.5)], 5).is_err());
        assert!(check_beam(&[raw("a", -1.0), raw("b", -1.0)], 1).is_err());
        assert!(check_beam(&[raw("a", -0.5), raw("b", -1.0)], 2).is_ok());
    }

    #[test]
    fn defaults() {
        assert_eq!(EnsembleConfig::default(), EnsembleConfig { k: 5, t: 100 });
    }
}
