//! Test-suite validation of candidate patches.
//!
//! A patch is *plausible* when it compiles, keeps every originally passing
//! test passing and makes every trigger (originally failing) test pass. A
//! *partial* patch makes at least one trigger pass without regressing any
//! passing test.
//!
//! Single-hunk bugs walk the merged candidate list until the first
//! plausible patch. Multi-hunk bugs first try the uniform candidates
//! (same text on every hunk), then visit hunks one at a time in
//! (path, line) order, keeping the first partial patch found for each hunk
//! and leaving the source in place when none is found.

mod command;
pub mod patch;
pub mod synth;
pub mod table;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::hunk::HunkId;
use crate::rank::{uniform_candidates, MergedCandidate};

pub use command::{CommandHarness, CommandSpec, SKIP_TESTS_ENV};
pub use patch::{HunkSite, PatchError};

pub type TestId = String;

/// Default number of unpatched runs used to screen for flaky tests.
pub const DEFAULT_FLAKY_REPEATS: usize = 5;
/// Default per-run timeout.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Error,
    Timeout,
}

impl Outcome {
    pub fn is_pass(self) -> bool {
        self == Outcome::Pass
    }
}

pub(crate) mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

/// Result of one suite execution. A build or run failure leaves
/// `compiled == false` and no outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SuiteReport {
    pub compiled: bool,
    pub outcomes: BTreeMap<TestId, Outcome>,
    #[serde(with = "duration_secs")]
    pub wall_time: Duration,
}

impl SuiteReport {
    pub fn not_compiled(wall_time: Duration) -> Self {
        SuiteReport { compiled: false, outcomes: BTreeMap::new(), wall_time }
    }

    pub fn passes(&self, test: &str) -> bool {
        self.outcomes.get(test).is_some_and(|o| o.is_pass())
    }

    pub fn timed_out(&self) -> bool {
        self.outcomes.values().any(|&o| o == Outcome::Timeout)
    }
}

/// Outcomes of the unpatched program with flaky tests set aside.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Baseline {
    pub passing: BTreeSet<TestId>,
    pub failing: BTreeSet<TestId>,
    pub flaky: BTreeSet<TestId>,
}

impl Baseline {
    /// Splits an unpatched report into passing and trigger tests. Fails
    /// when the program does not build or nothing fails.
    pub fn measure(report: &SuiteReport, flaky: BTreeSet<TestId>) -> Result<Baseline, ValidateError> {
        if !report.compiled {
            return Err(ValidateError::Baseline("the unpatched program does not build or run".into()));
        }
        let mut baseline = Baseline { flaky, ..Default::default() };
        for (id, outcome) in &report.outcomes {
            if baseline.flaky.contains(id) {
                continue;
            }
            if outcome.is_pass() {
                baseline.passing.insert(id.clone());
            } else {
                baseline.failing.insert(id.clone());
            }
        }
        if baseline.failing.is_empty() {
            return Err(ValidateError::Baseline("no failing non-flaky test to repair against".into()));
        }
        Ok(baseline)
    }

    /// Tracked (non-flaky) tests.
    pub fn tests(&self) -> BTreeSet<TestId> {
        self.passing.union(&self.failing).cloned().collect()
    }

    /// The baseline after accepting a partial patch whose run gave `report`.
    pub fn advance(&self, report: &SuiteReport) -> Baseline {
        let (passing, failing) = self.tests().into_iter().partition(|t| report.passes(t));
        Baseline { passing, failing, flaky: self.flaky.clone() }
    }
}

/// What to put at one hunk: the original lines or a replacement (empty
/// text deletes the hunk).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Choice {
    Source,
    Patch(String),
}

impl Choice {
    pub fn patch_text(&self) -> Option<&str> {
        match self {
            Choice::Source => None,
            Choice::Patch(t) => Some(t),
        }
    }
}

/// Hunks without an entry keep their source.
pub type PatchSet = BTreeMap<HunkId, Choice>;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Patch(#[from] PatchError),
    #[error("sandbox failure: {0}")]
    Sandbox(String),
}

#[derive(Debug, thiserror::Error)]
pub enum ValidateError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("baseline: {0}")]
    Baseline(String),
    #[error("invalid validation input: {0}")]
    Input(String),
}

/// Builds and tests a program with a patch set applied. Each call must be
/// isolated from every other; calls for one bug are made sequentially.
pub trait TestHarness: Sync {
    /// Runs the suite with `patchset` applied. Tests in `skip` should not
    /// be executed.
    fn run(&self, patchset: &PatchSet, skip: &BTreeSet<TestId>) -> Result<SuiteReport, HarnessError>;
}

/// Runs the suite, never executing or reporting tests in `flaky`.
pub fn run_suite(
    harness: &dyn TestHarness,
    patchset: &PatchSet,
    flaky: &BTreeSet<TestId>,
) -> Result<SuiteReport, HarnessError> {
    let mut report = harness.run(patchset, flaky)?;
    report.outcomes.retain(|id, _| !flaky.contains(id));
    Ok(report)
}

/// Tests whose outcome is not the same across `repeats` unpatched runs.
/// A test missing from some runs counts as changing.
pub fn detect_flaky(harness: &dyn TestHarness, repeats: usize) -> Result<BTreeSet<TestId>, ValidateError> {
    if repeats < 2 {
        return Err(ValidateError::Input(format!("flaky screening needs at least 2 runs, got {repeats}")));
    }
    let none = BTreeSet::new();
    let mut seen: BTreeMap<TestId, BTreeSet<Option<Outcome>>> = BTreeMap::new();
    let mut runs = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let report = harness.run(&PatchSet::new(), &none)?;
        if !report.compiled {
            return Err(ValidateError::Baseline("the unpatched program does not build or run".into()));
        }
        runs.push(report);
    }
    let all: BTreeSet<&TestId> = runs.iter().flat_map(|r| r.outcomes.keys()).collect();
    for id in all {
        let outcomes = seen.entry(id.clone()).or_default();
        for run in &runs {
            outcomes.insert(run.outcomes.get(id).copied());
        }
    }
    Ok(seen.into_iter().filter(|(_, o)| o.len() > 1).map(|(id, _)| id).collect())
}

/// Compiles, keeps every passing test passing, and fixes every trigger.
pub fn is_plausible(report: &SuiteReport, baseline: &Baseline) -> bool {
    report.compiled
        && baseline.passing.iter().all(|t| report.passes(t))
        && baseline.failing.iter().all(|t| report.passes(t))
}

/// Fixes at least one trigger without regressions, but not all of them.
pub fn is_partial(report: &SuiteReport, baseline: &Baseline) -> bool {
    report.compiled
        && baseline.passing.iter().all(|t| report.passes(t))
        && baseline.failing.iter().any(|t| report.passes(t))
        && !is_plausible(report, baseline)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepairStatus {
    Plausible,
    Exhausted,
    Error,
}

/// Which step of the search produced the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Single,
    Uniform,
    Sequential,
    Done,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationTimings {
    #[serde(with = "duration_secs")]
    pub total: Duration,
    /// Time spent inside suite executions.
    #[serde(with = "duration_secs")]
    pub suites: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairResult {
    pub status: RepairStatus,
    pub patchset: PatchSet,
    /// Candidate patch sets validated (suite executions).
    pub npc: usize,
    /// 1-based position of the plausible candidate in the list it came
    /// from (merged list, or uniform list for phase-1 hits).
    pub first_plausible_rank: Option<usize>,
    pub phase: Phase,
    /// Validations that hit the time limit.
    pub timeouts: usize,
    /// Validations that did not build or run.
    pub uncompilable: usize,
    /// Hunks whose partial patch was kept during the sequential phase.
    pub partials: Vec<HunkId>,
    #[serde(skip)]
    pub timings: ValidationTimings,
}

/// Counts validations and keeps timing for one bug.
struct Validator<'a> {
    harness: &'a dyn TestHarness,
    flaky: BTreeSet<TestId>,
    npc: usize,
    timeouts: usize,
    uncompilable: usize,
    suites: Duration,
}

impl<'a> Validator<'a> {
    fn new(harness: &'a dyn TestHarness, baseline: &Baseline) -> Self {
        Validator { harness, flaky: baseline.flaky.clone(), npc: 0, timeouts: 0, uncompilable: 0, suites: Duration::ZERO }
    }

    fn validate(&mut self, patchset: &PatchSet) -> Result<SuiteReport, HarnessError> {
        let started = Instant::now();
        let report = run_suite(self.harness, patchset, &self.flaky)?;
        self.suites += started.elapsed();
        self.npc += 1;
        if report.timed_out() {
            self.timeouts += 1;
        }
        if !report.compiled {
            self.uncompilable += 1;
        }
        Ok(report)
    }

    fn finish(
        self,
        started: Instant,
        status: RepairStatus,
        patchset: PatchSet,
        rank: Option<usize>,
        phase: Phase,
        partials: Vec<HunkId>,
    ) -> RepairResult {
        RepairResult {
            status,
            patchset,
            npc: self.npc,
            first_plausible_rank: rank,
            phase,
            timeouts: self.timeouts,
            uncompilable: self.uncompilable,
            partials,
            timings: ValidationTimings { total: started.elapsed(), suites: self.suites },
        }
    }
}

fn patch_of(candidate: &MergedCandidate) -> Choice {
    Choice::Patch(candidate.display.clone())
}

/// Validates a single-hunk bug: candidates in order until the first
/// plausible one.
pub fn validate_single(
    hunk: &HunkId,
    merged: &[MergedCandidate],
    harness: &dyn TestHarness,
    baseline: &Baseline,
) -> Result<RepairResult, ValidateError> {
    let started = Instant::now();
    let mut v = Validator::new(harness, baseline);
    for (pos, cand) in merged.iter().enumerate() {
        let patchset = PatchSet::from([(hunk.clone(), patch_of(cand))]);
        let report = v.validate(&patchset)?;
        if is_plausible(&report, baseline) {
            return Ok(v.finish(started, RepairStatus::Plausible, patchset, Some(pos + 1), Phase::Single, vec![]));
        }
    }
    Ok(v.finish(started, RepairStatus::Exhausted, PatchSet::new(), None, Phase::Single, vec![]))
}

/// Progress of the multi-hunk search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiHunkState {
    pub hunk_order: Vec<HunkId>,
    pub chosen: PatchSet,
    pub baseline: Baseline,
    pub npc: usize,
    pub phase: Phase,
}

/// Validates a bug with two or more hunks. `per_hunk[i]` is the merged
/// list for `hunks[i]`.
pub fn validate_multi(
    hunks: &[HunkId],
    per_hunk: &[Vec<MergedCandidate>],
    harness: &dyn TestHarness,
    baseline: &Baseline,
) -> Result<RepairResult, ValidateError> {
    if hunks.len() < 2 || hunks.len() != per_hunk.len() {
        return Err(ValidateError::Input(format!(
            "multi-hunk validation needs >= 2 hunks with one list each (got {} hunks, {} lists)",
            hunks.len(),
            per_hunk.len()
        )));
    }
    let started = Instant::now();
    let mut v = Validator::new(harness, baseline);
    let mut order: Vec<usize> = (0..hunks.len()).collect();
    order.sort_by(|&a, &b| hunks[a].cmp(&hunks[b]));
    let mut state = MultiHunkState {
        hunk_order: order.iter().map(|&i| hunks[i].clone()).collect(),
        chosen: PatchSet::new(),
        baseline: baseline.clone(),
        npc: 0,
        phase: Phase::Uniform,
    };

    // Phase 1: one text applied to every hunk.
    let sorted_lists: Vec<Vec<MergedCandidate>> = order.iter().map(|&i| per_hunk[i].clone()).collect();
    for (pos, uniform) in uniform_candidates(&sorted_lists).iter().enumerate() {
        let patchset: PatchSet =
            state.hunk_order.iter().map(|h| (h.clone(), Choice::Patch(uniform.normalized.clone()))).collect();
        let report = v.validate(&patchset)?;
        if is_plausible(&report, baseline) {
            return Ok(v.finish(started, RepairStatus::Plausible, patchset, Some(pos + 1), Phase::Uniform, vec![]));
        }
    }

    // Phase 2: one hunk at a time against the accumulated patch set.
    state.phase = Phase::Sequential;
    let mut partials = Vec::new();
    for (slot, &i) in order.iter().enumerate() {
        let hunk = &state.hunk_order[slot];
        for (pos, cand) in per_hunk[i].iter().enumerate() {
            let mut patchset = state.chosen.clone();
            patchset.insert(hunk.clone(), patch_of(cand));
            let report = v.validate(&patchset)?;
            state.npc = v.npc;
            if is_plausible(&report, &state.baseline) {
                partials.extend(state.chosen.keys().cloned());
                return Ok(v.finish(started, RepairStatus::Plausible, patchset, Some(pos + 1), Phase::Sequential, partials));
            }
            if is_partial(&report, &state.baseline) {
                state.baseline = state.baseline.advance(&report);
                state.chosen = patchset;
                break;
            }
        }
    }
    state.phase = Phase::Done;
    partials.extend(state.chosen.keys().cloned());
    // The last accepted partial's report is the combined report, and a
    // partial is by definition not plausible.
    Ok(v.finish(started, RepairStatus::Exhausted, state.chosen, None, Phase::Done, partials))
}

/// Dispatches on the hunk count.
pub fn validate_bug(
    hunks: &[HunkId],
    per_hunk: &[Vec<MergedCandidate>],
    harness: &dyn TestHarness,
    baseline: &Baseline,
) -> Result<RepairResult, ValidateError> {
    match (hunks, per_hunk) {
        ([hunk], [merged]) => validate_single(hunk, merged, harness, baseline),
        _ => validate_multi(hunks, per_hunk, harness, baseline),
    }
}

#[cfg(test)]
mod tests {
    use super::table::{TableHarness, TableTest};
    use super::*;

    fn report(compiled: bool, outcomes: &[(&str, Outcome)]) -> SuiteReport {
        SuiteReport {
            compiled,
            outcomes: outcomes.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            wall_time: Duration::ZERO,
        }
    }

    fn baseline(passing: &[&str], failing: &[&str]) -> Baseline {
        Baseline {
            passing: passing.iter().map(|s| s.to_string()).collect(),
            failing: failing.iter().map(|s| s.to_string()).collect(),
            flaky: BTreeSet::new(),
        }
    }

    use Outcome::*;

    #[test]
    fn plausibility_rules() {
        let b = baseline(&["p"], &["t1", "t2"]);
        assert!(!is_plausible(&report(true, &[("p", Pass), ("t1", Fail), ("t2", Fail)]), &b));
        assert!(is_plausible(&report(true, &[("p", Pass), ("t1", Pass), ("t2", Pass)]), &b));
        assert!(!is_plausible(&report(true, &[("p", Fail), ("t1", Pass), ("t2", Pass)]), &b));
        assert!(!is_plausible(&report(false, &[]), &b));
    }

    #[test]
    fn partial_rules() {
        let b = baseline(&["p"], &["t1", "t2"]);
        assert!(is_partial(&report(true, &[("p", Pass), ("t1", Pass), ("t2", Fail)]), &b));
        assert!(!is_partial(&report(true, &[("p", Fail), ("t1", Pass), ("t2", Fail)]), &b));
        assert!(!is_partial(&report(true, &[("p", Pass), ("t1", Fail), ("t2", Timeout)]), &b));
        assert!(!is_partial(&report(true, &[("p", Pass), ("t1", Pass), ("t2", Pass)]), &b));
    }

    #[test]
    fn baseline_requires_a_trigger() {
        assert!(Baseline::measure(&report(true, &[("a", Pass)]), BTreeSet::new()).is_err());
        assert!(Baseline::measure(&report(false, &[]), BTreeSet::new()).is_err());
        let flaky = BTreeSet::from(["f".to_string()]);
        let b = Baseline::measure(&report(true, &[("a", Pass), ("b", Error), ("f", Fail)]), flaky).unwrap();
        assert_eq!(b.failing, BTreeSet::from(["b".to_string()]));
        assert!(!b.passing.contains("f") && !b.failing.contains("f"));
    }

    fn merged(texts: &[&str]) -> Vec<MergedCandidate> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| MergedCandidate {
                normalized: t.to_string(),
                display: t.to_string(),
                best_rank: Some(i + 1),
                best_score: Some(-(i as f64)),
                provenance: vec![],
            })
            .collect()
    }

    fn h(n: usize) -> HunkId {
        HunkId::new("f.c", n)
    }

    #[test]
    fn single_hunk_counts_until_plausible() {
        let harness = TableHarness::new(vec![
            TableTest::new("keep").accept(h(1), &[None, Some("a"), Some("b"), Some("fix")]),
            TableTest::new("trigger").accept(h(1), &[Some("fix")]),
        ]);
        let b = Baseline::measure(&harness.run(&PatchSet::new(), &BTreeSet::new()).unwrap(), BTreeSet::new()).unwrap();
        let r = validate_single(&h(1), &merged(&["a", "b", "fix", "zzz"]), &harness, &b).unwrap();
        assert_eq!((r.status, r.npc, r.first_plausible_rank), (RepairStatus::Plausible, 3, Some(3)));
        let r = validate_single(&h(1), &[], &harness, &b).unwrap();
        assert_eq!((r.status, r.npc), (RepairStatus::Exhausted, 0));
    }

    #[test]
    fn uniform_phase_finds_shared_fix_in_one_validation() {
        let harness = TableHarness::new(vec![
            TableTest::new("t").accept(h(1), &[Some("same")]).accept(h(9), &[Some("same")]),
        ]);
        let b = Baseline::measure(&harness.run(&PatchSet::new(), &BTreeSet::new()).unwrap(), BTreeSet::new()).unwrap();
        let r = validate_multi(&[h(1), h(9)], &[merged(&["same", "x"]), merged(&["same", "y"])], &harness, &b).unwrap();
        assert_eq!((r.status, r.npc, r.phase), (RepairStatus::Plausible, 1, Phase::Uniform));
    }

    #[test]
    fn sequential_phase_keeps_source_when_no_partial() {
        // Hunk 1 has nothing that helps; hunk 2's candidate fixes everything.
        let harness = TableHarness::new(vec![
            TableTest::new("keep").accept(h(1), &[None]),
            TableTest::new("t1").accept(h(2), &[Some("fix2")]),
            TableTest::new("t2").accept(h(2), &[Some("fix2")]),
        ]);
        let b = Baseline::measure(&harness.run(&PatchSet::new(), &BTreeSet::new()).unwrap(), BTreeSet::new()).unwrap();
        let r = validate_multi(&[h(2), h(1)], &[merged(&["nope", "fix2"]), merged(&["bad1", "bad2"])], &harness, &b).unwrap();
        assert_eq!(r.status, RepairStatus::Plausible);
        assert_eq!(r.phase, Phase::Sequential);
        // uniform: none shared; hunk 1: 2 tries; hunk 2: 2 tries.
        assert_eq!(r.npc, 4);
        assert_eq!(r.patchset, PatchSet::from([(h(2), Choice::Patch("fix2".into()))]));
        assert!(r.partials.is_empty());
    }

    #[test]
    fn partials_compose_across_hunks() {
        let harness = TableHarness::new(vec![
            TableTest::new("t1").accept(h(1), &[Some("a")]),
            TableTest::new("t2").accept(h(2), &[Some("b")]),
        ]);
        let b = Baseline::measure(&harness.run(&PatchSet::new(), &BTreeSet::new()).unwrap(), BTreeSet::new()).unwrap();
        let r = validate_multi(&[h(1), h(2)], &[merged(&["x", "a"]), merged(&["b"])], &harness, &b).unwrap();
        assert_eq!(r.status, RepairStatus::Plausible);
        assert_eq!(r.npc, 3);
        assert_eq!(r.partials, vec![h(1)]);
        assert_eq!(r.patchset.len(), 2);
    }

    #[test]
    fn multi_requires_two_hunks() {
        let harness = TableHarness::new(vec![]);
        assert!(matches!(
            validate_multi(&[h(1)], &[vec![]], &harness, &Baseline::default()),
            Err(ValidateError::Input(_))
        ));
    }

    fn flaky_harness(p: f64, seed: u64) -> table::FlakyHarness {
        let stable = BTreeMap::from([("ok".to_string(), Outcome::Pass), ("bad".to_string(), Outcome::Fail)]);
        table::FlakyHarness::new(stable, BTreeMap::from([("coin".to_string(), p)]), seed)
    }

    #[test]
    fn stable_suite_has_no_flaky_tests() {
        assert!(detect_flaky(&flaky_harness(0.0, 1), 5).unwrap().is_empty());
        assert!(detect_flaky(&flaky_harness(1.0, 1), 5).unwrap().is_empty());
    }

    #[test]
    fn flaky_screening_needs_two_runs_and_a_build() {
        assert!(matches!(detect_flaky(&flaky_harness(0.5, 1), 1), Err(ValidateError::Input(_))));
        struct NoBuild;
        impl TestHarness for NoBuild {
            fn run(&self, _: &PatchSet, _: &BTreeSet<TestId>) -> Result<SuiteReport, HarnessError> {
                Ok(report(false, &[]))
            }
        }
        assert!(matches!(detect_flaky(&NoBuild, 3), Err(ValidateError::Baseline(_))));
    }

    #[test]
    fn flaky_tests_are_stripped_from_suite_runs() {
        let h = flaky_harness(0.5, 3);
        let flaky = BTreeSet::from(["coin".to_string()]);
        let r = run_suite(&h, &PatchSet::new(), &flaky).unwrap();
        assert_eq!(r.outcomes.keys().collect::<Vec<_>>(), ["bad", "ok"]);
    }

    // Five runs catch a p = 1/3 test only about 86% of the time; eight
    // runs are the first count above 95%.
    #[test]
    fn eight_runs_detect_a_one_in_three_test() {
        let trials = 4000;
        let rate = |repeats| {
            let hits = (0..trials)
                .filter(|&seed| detect_flaky(&flaky_harness(1.0 / 3.0, seed), repeats).unwrap().contains("coin"))
                .count();
            hits as f64 / trials as f64
        };
        let eight = rate(8);
        assert!(eight >= 0.95, "eight runs: {eight}");
        assert!(rate(5) < eight);
    }
}
