//! Per-bug repair: context, retrieval, prompt, generation, merge and
//! validation, plus the report written for each bug.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::manifest::{BugManifest, GeneratorSpec, Manifest};
use super::PipelineError;
use crate::context::{resolve_context, ContextKind, LineRange};
use crate::diff::unified_diff;
use crate::encode::{build_prompt, fit_to_budget, Prompt};
use crate::generate::{ensemble_generate, Generator, RemoteGenerator, ReplayFile};
use crate::hunk::HunkId;
use crate::lang::Language;
use crate::par::{self, Execution};
use crate::rank::{merge_candidates, MergedCandidate};
use crate::retrieval::{build_line_index_with, retrieve_with, RetrievedLine, TermFrequencyEmbedder};
use crate::text::normalize_ws;
use crate::tokenize::SimpleTokenizer;
use crate::validate::patch::apply_patchset;
use crate::validate::{
    detect_flaky, run_suite, validate_bug, Baseline, Choice, CommandHarness, PatchSet, Phase, RepairStatus,
    TestHarness,
};

pub const REPORT_KIND: &str = "repair-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default)]
pub struct RepairOptions {
    /// Bugs repaired concurrently.
    pub jobs: usize,
    /// Parent of the per-bug scratch copies.
    pub sandbox_dir: Option<PathBuf>,
    pub exec: Execution,
}

/// What the pipeline saw for one hunk before generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HunkLog {
    pub id: HunkId,
    pub range: LineRange,
    pub context: ContextKind,
    pub context_range: LineRange,
    pub retrieved: Vec<RetrievedLine>,
    pub prompt_tokens: usize,
    /// Raw candidates over all checkpoints.
    pub generated: usize,
    /// Length of the merged list, deletion patch included.
    pub merged: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub total: f64,
    pub prepare: f64,
    pub generate: f64,
    /// Flaky screening and baseline measurement.
    pub baseline: f64,
    pub validate: f64,
    /// Time inside suite runs during validation.
    pub suites: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    pub kind: String,
    pub schema_version: u32,
    pub bug: String,
    pub language: Language,
    pub status: RepairStatus,
    #[serde(default)]
    pub error: Option<String>,
    pub hunks: Vec<HunkLog>,
    #[serde(default)]
    pub baseline: Option<Baseline>,
    pub patchset: PatchSet,
    /// Unified diff of `patchset` against the buggy sources.
    pub diff: String,
    pub npc: usize,
    pub first_plausible_rank: Option<usize>,
    #[serde(default)]
    pub phase: Option<Phase>,
    pub timeouts: usize,
    pub uncompilable: usize,
    pub partials: Vec<HunkId>,
    /// Whitespace-insensitive match with the reference fix, when one is given.
    pub exact_match: Option<bool>,
    pub warnings: Vec<String>,
    /// Wall-clock durations in seconds; the only nondeterministic field.
    pub timings: Timings,
}

impl RepairReport {
    fn new(bug: &BugManifest) -> Self {
        RepairReport {
            kind: REPORT_KIND.into(),
            schema_version: REPORT_VERSION,
            bug: bug.id.clone(),
            language: bug.language,
            status: RepairStatus::Error,
            error: None,
            hunks: Vec::new(),
            baseline: None,
            patchset: PatchSet::new(),
            diff: String::new(),
            npc: 0,
            first_plausible_rank: None,
            phase: None,
            timeouts: 0,
            uncompilable: 0,
            partials: Vec::new(),
            exact_match: None,
            warnings: Vec::new(),
            timings: Timings::default(),
        }
    }
}

/// A hunk ready for generation.
#[derive(Debug, Clone)]
pub struct PreparedHunk {
    pub id: HunkId,
    pub range: LineRange,
    pub text: String,
    pub log: HunkLog,
    pub prompt: Prompt,
    pub warnings: Vec<String>,
}

/// Reads every file holding a hunk, keyed by its path relative to the root.
pub fn read_sources(bug: &BugManifest) -> Result<BTreeMap<String, String>, PipelineError> {
    let mut out = BTreeMap::new();
    for hunk in &bug.hunks {
        if !out.contains_key(&hunk.file) {
            let path = bug.root.join(&hunk.file);
            let text = fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
            out.insert(hunk.file.clone(), text);
        }
    }
    Ok(out)
}

/// Context, retrieval and prompt for every hunk, in manifest order.
pub fn prepare_hunks(
    bug: &BugManifest,
    sources: &BTreeMap<String, String>,
    exec: Execution,
) -> Result<Vec<PreparedHunk>, PipelineError> {
    let mut out = Vec::with_capacity(bug.hunks.len());
    for spec in &bug.hunks {
        let source = &sources[&spec.file];
        let lines: Vec<&str> = source.lines().collect();
        let range = spec.range();
        if !range.fits(lines.len()) {
            return Err(PipelineError::Input(format!("hunk {} lies outside {}", spec.id(), spec.file)));
        }
        let text = range.slice(&lines).join("\n");
        let (context, warning) = resolve_context(source, range, bug.language)?;
        let index = build_line_index_with(&TermFrequencyEmbedder, &spec.file, source, &context, &text);
        let retrieved = retrieve_with(&TermFrequencyEmbedder, &text, &index, bug.params.r, bug.params.threshold, exec);
        let prompt = build_prompt(bug.language.prefix(), &text, &retrieved, &context);
        let prompt = fit_to_budget(&prompt, bug.params.budget(), &SimpleTokenizer)
            .map_err(|e| PipelineError::Input(format!("hunk {}: {e}", spec.id())))?;
        out.push(PreparedHunk {
            id: spec.id(),
            range,
            log: HunkLog {
                id: spec.id(),
                range,
                context: context.kind,
                context_range: context.range,
                retrieved,
                prompt_tokens: prompt.token_count,
                generated: 0,
                merged: 0,
            },
            text,
            prompt,
            warnings: warning.into_iter().collect(),
        });
    }
    Ok(out)
}

fn backends(bug: &BugManifest) -> Result<Vec<Box<dyn Generator>>, PipelineError> {
    match &bug.generator {
        GeneratorSpec::Replay(path) => Ok(Arc::new(ReplayFile::load(path)?).generators(bug.params.k)),
        GeneratorSpec::Remote { endpoint, timeout_secs } => {
            let timeout = Duration::try_from_secs_f64(*timeout_secs)
                .map_err(|e| PipelineError::Input(format!("remote timeout: {e}")))?;
            Ok((0..bug.params.k)
                .map(|_| Box::new(RemoteGenerator::new(endpoint, timeout)) as Box<dyn Generator>)
                .collect())
        }
    }
}

/// Unified diff of `patchset` against `sources`, one section per changed
/// file.
pub fn render_patchset(
    sources: &BTreeMap<String, String>,
    bug: &BugManifest,
    patchset: &PatchSet,
) -> Result<String, PipelineError> {
    let patched = apply_patchset(sources, &bug.sites(), patchset).map_err(crate::validate::HarnessError::from)?;
    Ok(patched
        .iter()
        .map(|(path, new)| unified_diff(&format!("a/{path}"), &format!("b/{path}"), &sources[path], new, 3))
        .collect())
}

/// Whitespace-normalized comparison with the reference fix.
pub fn exact_match(
    patchset: &PatchSet,
    reference: &BTreeMap<HunkId, String>,
    prepared: &[PreparedHunk],
) -> bool {
    prepared.iter().all(|h| {
        let chosen = patchset.get(&h.id).and_then(Choice::patch_text).unwrap_or(&h.text);
        let expected = reference.get(&h.id).map(String::as_str).unwrap_or(&h.text);
        normalize_ws(chosen) == normalize_ws(expected)
    })
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn run(bug: &BugManifest, opts: &RepairOptions, report: &mut RepairReport) -> Result<(), PipelineError> {
    let started = Instant::now();
    let sources = read_sources(bug)?;
    let mut prepared = prepare_hunks(bug, &sources, opts.exec)?;
    for h in &prepared {
        report.warnings.extend(h.warnings.iter().cloned());
    }
    report.timings.prepare = secs(started.elapsed());

    let gen_started = Instant::now();
    let backends = backends(bug)?;
    let mut merged: Vec<Vec<MergedCandidate>> = Vec::with_capacity(prepared.len());
    for h in &mut prepared {
        let out = ensemble_generate(&backends, &h.id, &h.prompt, bug.params.ensemble(), opts.exec)?;
        report.warnings.extend(out.warnings.iter().cloned());
        let list = merge_candidates(&out.per_checkpoint, &h.text);
        h.log.generated = out.total();
        h.log.merged = list.len();
        merged.push(list);
    }
    report.hunks = prepared.iter().map(|h| h.log.clone()).collect();
    report.timings.generate = secs(gen_started.elapsed());

    let base_started = Instant::now();
    let harness = CommandHarness::new(&bug.root, bug.sites(), bug.command_spec(), opts.sandbox_dir.as_deref())?;
    let flaky = detect_flaky(&harness, bug.flaky_repeats)?;
    if !flaky.is_empty() {
        report.warnings.push(format!("excluded flaky tests: {}", flaky.iter().cloned().collect::<Vec<_>>().join(", ")));
    }
    let unpatched = run_suite(&harness as &dyn TestHarness, &PatchSet::new(), &flaky)?;
    let baseline = Baseline::measure(&unpatched, flaky)?;
    report.baseline = Some(baseline.clone());
    report.timings.baseline = secs(base_started.elapsed());

    let ids: Vec<HunkId> = prepared.iter().map(|h| h.id.clone()).collect();
    let result = validate_bug(&ids, &merged, &harness, &baseline)?;
    report.timings.validate = secs(result.timings.total);
    report.timings.suites = secs(result.timings.suites);
    report.status = result.status;
    report.diff = render_patchset(&sources, bug, &result.patchset)?;
    report.exact_match = bug
        .reference
        .as_ref()
        .map(|r| result.status == RepairStatus::Plausible && exact_match(&result.patchset, r, &prepared));
    report.patchset = result.patchset;
    report.npc = result.npc;
    report.first_plausible_rank = result.first_plausible_rank;
    report.phase = Some(result.phase);
    report.timeouts = result.timeouts;
    report.uncompilable = result.uncompilable;
    report.partials = result.partials;
    Ok(())
}

/// Repairs one bug. Failures are recorded in the report with status
/// `error`.
pub fn repair_bug(bug: &BugManifest, opts: &RepairOptions) -> RepairReport {
    let started = Instant::now();
    let mut report = RepairReport::new(bug);
    if let Err(err) = run(bug, opts, &mut report) {
        tracing::error!(bug = %bug.id, "{err}");
        report.status = RepairStatus::Error;
        report.error = Some(err.to_string());
    }
    report.timings.total = secs(started.elapsed());
    report
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairSummary {
    pub bugs: usize,
    pub plausible: usize,
    pub exhausted: usize,
    pub errors: usize,
}

/// Writes `<id>.json` and `<id>.diff` for a report.
pub fn write_report(out_dir: &Path, report: &RepairReport) -> Result<(), PipelineError> {
    let json = out_dir.join(format!("{}.json", report.bug));
    let mut text = serde_json::to_string_pretty(report).expect("reports serialize");
    text.push('\n');
    fs::write(&json, text).map_err(|e| PipelineError::io(&json, e))?;
    let diff = out_dir.join(format!("{}.diff", report.bug));
    fs::write(&diff, &report.diff).map_err(|e| PipelineError::io(&diff, e))?;
    Ok(())
}

/// Repairs every bug of `manifest`, up to `opts.jobs` at a time, writing
/// each report as soon as its bug finishes.
pub fn repair_all(manifest: &Manifest, out_dir: &Path, opts: &RepairOptions) -> Result<Vec<RepairReport>, PipelineError> {
    fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;
    let results = par::with_threads(opts.jobs.max(1), || {
        par::map(opts.exec, &manifest.bugs, |bug| {
            let report = repair_bug(bug, opts);
            write_report(out_dir, &report).map(|_| report)
        })
    });
    results.into_iter().collect()
}

pub fn summarize(reports: &[RepairReport]) -> RepairSummary {
    let count = |s| reports.iter().filter(|r| r.status == s).count();
    RepairSummary {
        bugs: reports.len(),
        plausible: count(RepairStatus::Plausible),
        exhausted: count(RepairStatus::Exhausted),
        errors: count(RepairStatus::Error),
    }
}
