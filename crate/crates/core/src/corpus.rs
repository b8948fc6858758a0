//! Mining buggy/fixed hunk pairs and filtering them into training
//! instances.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::context::{self, LineRange};
use crate::diff::{self, DiffError};
use crate::lang::{Language, UnsupportedLanguage};
use crate::lexer;
use crate::text::{flatten_lines, same_code};
use crate::tokenize::{TokenBudget, Tokenizer};

const BUGFIX_KEYWORDS: [&str; 3] = ["bug", "fix", "patch"];

/// Separator between the hunk and the context in encoded inputs.
pub const SEPARATOR: &str = ":";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error(transparent)]
    Language(#[from] UnsupportedLanguage),
    #[error("no language could be inferred for `{0}`")]
    UnknownLanguage(String),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Origin {
    pub source: String,
    /// 1-based hunk ordinal within the source.
    pub hunk: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingInstance {
    pub language: Language,
    pub buggy_hunk: String,
    pub context: String,
    pub fixed_hunk: String,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilePair {
    pub path: String,
    pub buggy: String,
    pub fixed: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitRecord {
    pub message: String,
    pub file_pairs: Vec<FilePair>,
}

/// Keyword heuristic for bug-fixing commits: a case-insensitive substring
/// match on "bug", "fix" or "patch" (so "debug" counts).
pub fn is_bugfix_commit(message: &str) -> bool {
    let lower = message.to_lowercase();
    BUGFIX_KEYWORDS.iter().any(|k| lower.contains(k))
}

/// One instance per zero-context diff hunk between `buggy` and `fixed`.
pub fn extract_instances(buggy: &str, fixed: &str, language: Language, source: &str) -> Vec<TrainingInstance> {
    let old: Vec<&str> = buggy.lines().collect();
    let new: Vec<&str> = fixed.lines().collect();
    diff::diff_lines(&old, &new)
        .into_iter()
        .enumerate()
        .map(|(ordinal, hunk)| {
            let range = LineRange::new(hunk.old_start, hunk.old_lines.len());
            // Ranges come from the diff of this very file, so they always fit.
            let span = context::context_for_hunk(buggy, range, language).expect("diff hunk lies within its file");
            TrainingInstance {
                language,
                buggy_hunk: hunk.old_lines.join("\n"),
                context: span.text,
                fixed_hunk: hunk.new_lines.join("\n"),
                origin: Origin { source: source.to_string(), hunk: ordinal + 1 },
            }
        })
        .collect()
}

/// Instances from a unified diff. Only the lines shown in each diff hunk
/// are known, so context is resolved against that fragment: a function
/// fully visible in the hunk is used, otherwise the line window.
///
/// `language` overrides inference from the file paths.
pub fn extract_from_unified_diff(
    diff_text: &str,
    language: Option<Language>,
    source: &str,
) -> Result<Vec<TrainingInstance>, CorpusError> {
    let mut out = Vec::new();
    for file in diff::parse_unified(diff_text)? {
        let lang = match language {
            Some(l) => l,
            None => Language::from_path(&file.old_path)
                .or_else(|| Language::from_path(&file.new_path))
                .ok_or_else(|| CorpusError::UnknownLanguage(file.old_path.clone()))?,
        };
        for hunk in &file.hunks {
            let old_side = hunk.old_side().join("\n");
            let new_side = hunk.new_side().join("\n");
            for mut inst in extract_instances(&old_side, &new_side, lang, source) {
                inst.origin.hunk = out.len() + 1;
                out.push(inst);
            }
        }
    }
    Ok(out)
}

/// Instances from every file pair of a bug-fixing commit; other commits
/// yield nothing. File languages are inferred from their paths.
pub fn extract_commit(record: &CommitRecord, source: &str) -> Result<Vec<TrainingInstance>, CorpusError> {
    if !is_bugfix_commit(&record.message) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for pair in &record.file_pairs {
        let lang = Language::from_path(&pair.path).ok_or_else(|| CorpusError::UnknownLanguage(pair.path.clone()))?;
        for mut inst in extract_instances(&pair.buggy, &pair.fixed, lang, &format!("{source}:{}", pair.path)) {
            inst.origin.hunk = out.len() + 1;
            out.push(inst);
        }
    }
    Ok(out)
}

/// How many instances each filtering rule removed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessStats {
    pub input: usize,
    pub duplicates: usize,
    pub unchanged: usize,
    pub empty_fix: usize,
    pub over_budget: usize,
    pub output: usize,
}

/// Applies the filtering rules in order:
///
/// 1. strip comments from the buggy and fixed hunks (context untouched);
/// 2. drop exact duplicates of (buggy, context, fixed), keeping the first;
/// 3. drop instances whose hunks are the same code up to whitespace;
/// 4. drop instances with an empty fixed hunk;
/// 5. drop instances whose buggy hunk exceeds the input budget or whose
///    fixed hunk exceeds the output budget.
pub fn preprocess_with_stats(
    instances: Vec<TrainingInstance>,
    tokenizer: &dyn Tokenizer,
    budget: TokenBudget,
) -> (Vec<TrainingInstance>, PreprocessStats) {
    let mut stats = PreprocessStats { input: instances.len(), ..Default::default() };

    let stripped = instances.into_iter().map(|mut inst| {
        inst.buggy_hunk = lexer::strip_hunk_comments(&inst.buggy_hunk, inst.language);
        inst.fixed_hunk = lexer::strip_hunk_comments(&inst.fixed_hunk, inst.language);
        inst
    });

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for inst in stripped {
        let key = (inst.buggy_hunk.clone(), inst.context.clone(), inst.fixed_hunk.clone());
        if !seen.insert(key) {
            stats.duplicates += 1;
        } else if same_code(&inst.buggy_hunk, &inst.fixed_hunk) {
            stats.unchanged += 1;
        } else if inst.fixed_hunk.trim().is_empty() {
            stats.empty_fix += 1;
        } else if tokenizer.count(&inst.buggy_hunk) > budget.input_limit
            || tokenizer.count(&inst.fixed_hunk) > budget.output_limit
        {
            stats.over_budget += 1;
        } else {
            out.push(inst);
        }
    }
    stats.output = out.len();
    (out, stats)
}

pub fn preprocess(instances: Vec<TrainingInstance>, tokenizer: &dyn Tokenizer, budget: TokenBudget) -> Vec<TrainingInstance> {
    preprocess_with_stats(instances, tokenizer, budget).0
}

/// Model input and label for one instance:
/// `<prefix> <buggy hunk> : <context>` and the fixed hunk, each flattened
/// to a single line.
pub fn encode_training(instance: &TrainingInstance) -> (String, String) {
    let input = format!(
        "{} {} {SEPARATOR} {}",
        instance.language.prefix(),
        flatten_lines(&instance.buggy_hunk),
        flatten_lines(&instance.context)
    );
    (input, flatten_lines(&instance.fixed_hunk))
}
