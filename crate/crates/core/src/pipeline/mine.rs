//! Mining a directory of buggy/fixed pairs and diffs into training data.
//!
//! Recognised inputs, searched recursively:
//!
//! * `<name>.buggy` with `<name>.fixed`, where `<name>` carries the source
//!   extension (`Foo.java.buggy`);
//! * `<name>.diff` or `<name>.patch` unified diffs, languages inferred from
//!   the paths inside;
//! * an optional `<name>.msg` commit message next to either. When present,
//!   inputs whose message does not look like a bug fix are skipped.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::PipelineError;
use crate::corpus::{
    encode_training, extract_from_unified_diff, extract_instances, is_bugfix_commit, preprocess_with_stats,
    PreprocessStats, TrainingInstance,
};
use crate::lang::Language;
use crate::par::{self, Execution};
use crate::tokenize::{SimpleTokenizer, TokenBudget};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Input {
    Pair { name: String, buggy: PathBuf, fixed: PathBuf },
    Diff { name: String, path: PathBuf },
}

impl Input {
    fn name(&self) -> &str {
        match self {
            Input::Pair { name, .. } | Input::Diff { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MineSummary {
    pub pairs: usize,
    pub diffs: usize,
    /// Inputs whose commit message has no bug-fix keyword.
    pub not_bugfix: usize,
    /// `.buggy` or `.fixed` files without their counterpart.
    pub unpaired: usize,
    pub rules: PreprocessStats,
}

/// One line of the instance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedInstance {
    #[serde(flatten)]
    pub instance: TrainingInstance,
    pub input: String,
    pub label: String,
}

fn read(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))
}

fn collect_inputs(dir: &Path, summary: &mut MineSummary) -> Result<Vec<(Input, Option<PathBuf>)>, PipelineError> {
    let mut buggy = BTreeMap::new();
    let mut fixed = BTreeMap::new();
    let mut diffs = Vec::new();
    let mut messages = BTreeMap::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| PipelineError::Input(format!("cannot read {}: {e}", dir.display())))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(dir).expect("walk stays under root").to_string_lossy().into_owned();
        let path = entry.path().to_path_buf();
        if let Some(name) = rel.strip_suffix(".buggy") {
            buggy.insert(name.to_string(), path);
        } else if let Some(name) = rel.strip_suffix(".fixed") {
            fixed.insert(name.to_string(), path);
        } else if let Some(name) = rel.strip_suffix(".msg") {
            messages.insert(name.to_string(), path);
        } else if let Some(name) = rel.strip_suffix(".diff").or_else(|| rel.strip_suffix(".patch")) {
            diffs.push(Input::Diff { name: name.to_string(), path });
        }
    }
    let mut inputs = Vec::new();
    for (name, b) in &buggy {
        match fixed.remove(name) {
            Some(f) => inputs.push(Input::Pair { name: name.clone(), buggy: b.clone(), fixed: f }),
            None => {
                tracing::warn!("{name}.buggy has no matching .fixed file");
                summary.unpaired += 1;
            }
        }
    }
    for name in fixed.keys() {
        tracing::warn!("{name}.fixed has no matching .buggy file");
        summary.unpaired += 1;
    }
    inputs.extend(diffs);
    inputs.sort_by(|a, b| a.name().cmp(b.name()));
    Ok(inputs
        .into_iter()
        .map(|input| {
            // `Foo.java.msg` or `Foo.msg` both describe `Foo.java`.
            let name = input.name();
            let stem = name.rsplit_once('.').map_or(name, |(s, _)| s);
            let msg = messages.get(name).or_else(|| messages.get(stem)).cloned();
            (input, msg)
        })
        .collect())
}

fn extract(input: &Input) -> Result<Vec<TrainingInstance>, PipelineError> {
    match input {
        Input::Pair { name, buggy, fixed } => {
            let lang = Language::from_path(name)
                .ok_or_else(|| PipelineError::Input(format!("{name}: no language for this extension")))?;
            Ok(extract_instances(&read(buggy)?, &read(fixed)?, lang, name))
        }
        Input::Diff { name, path } => Ok(extract_from_unified_diff(&read(path)?, None, name)?),
    }
}

/// Extracts, filters and encodes every input under `dir`, writing one
/// JSON instance per line to `out`.
pub fn mine_dir(dir: &Path, out: &Path, budget: TokenBudget, exec: Execution) -> Result<MineSummary, PipelineError> {
    if !dir.is_dir() {
        return Err(PipelineError::Input(format!("{} is not a readable directory", dir.display())));
    }
    let mut summary = MineSummary::default();
    let mut selected = Vec::new();
    for (input, msg) in collect_inputs(dir, &mut summary)? {
        if let Some(msg) = msg {
            if !is_bugfix_commit(&read(&msg)?) {
                summary.not_bugfix += 1;
                continue;
            }
        }
        match input {
            Input::Pair { .. } => summary.pairs += 1,
            Input::Diff { .. } => summary.diffs += 1,
        }
        selected.push(input);
    }

    let extracted = par::map(exec, &selected, extract);
    let mut instances = Vec::new();
    for batch in extracted {
        instances.extend(batch?);
    }
    let (kept, rules) = preprocess_with_stats(instances, &SimpleTokenizer, budget);
    summary.rules = rules;

    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
    }
    let file = fs::File::create(out).map_err(|e| PipelineError::io(out, e))?;
    let mut w = std::io::BufWriter::new(file);
    for instance in kept {
        let (input, label) = encode_training(&instance);
        let line = serde_json::to_string(&EncodedInstance { instance, input, label }).expect("instances serialize");
        writeln!(w, "{line}").map_err(|e| PipelineError::io(out, e))?;
    }
    w.flush().map_err(|e| PipelineError::io(out, e))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_dir_gives_empty_output() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out/instances.jsonl");
        let s = mine_dir(dir.path(), &out, TokenBudget::default(), Execution::Sequential).unwrap();
        assert_eq!(s, MineSummary::default());
        assert_eq!(fs::read_to_string(out).unwrap(), "");
    }

    #[test]
    fn comment_only_change_is_unchanged() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        fs::write(p.join("A.java.buggy"), "class A {\n  int f() {\n    return 1; // old\n  }\n}\n").unwrap();
        fs::write(p.join("A.java.fixed"), "class A {\n  int f() {\n    return 1; // new\n  }\n}\n").unwrap();
        fs::write(p.join("B.java.buggy"), "class B {\n  int g() {\n    return 1;\n  }\n}\n").unwrap();
        fs::write(p.join("B.java.fixed"), "class B {\n  int g() {\n    return 2;\n  }\n}\n").unwrap();
        fs::write(p.join("B.java.msg"), "Refactor\n").unwrap();
        let out = p.join("i.jsonl");
        let s = mine_dir(p, &out, TokenBudget::default(), Execution::Sequential).unwrap();
        assert_eq!((s.pairs, s.not_bugfix, s.rules.input, s.rules.unchanged, s.rules.output), (1, 1, 1, 1, 0));
    }
}
