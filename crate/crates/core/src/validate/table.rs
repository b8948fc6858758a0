//! In-process harnesses driven by tables instead of real programs. Used by
//! the synthetic bug generator, tests and benchmarks.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Choice, HarnessError, Outcome, PatchSet, SuiteReport, TestHarness, TestId};
use crate::hunk::HunkId;
use crate::text::normalize_ws;

/// `None` stands for the hunk's source lines.
pub type Key = Option<String>;

fn key_of(choice: Option<&Choice>) -> Key {
    choice.and_then(Choice::patch_text).map(normalize_ws)
}

/// A test that passes iff every hunk it depends on holds one of the
/// accepted versions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableTest {
    pub id: TestId,
    pub accepted: BTreeMap<HunkId, BTreeSet<Key>>,
}

impl TableTest {
    pub fn new(id: impl Into<TestId>) -> Self {
        TableTest { id: id.into(), accepted: BTreeMap::new() }
    }

    pub fn accept(mut self, hunk: HunkId, versions: &[Option<&str>]) -> Self {
        let set = self.accepted.entry(hunk).or_default();
        set.extend(versions.iter().map(|v| v.map(normalize_ws)));
        self
    }

    pub fn passes(&self, patchset: &PatchSet) -> bool {
        self.accepted.iter().all(|(hunk, ok)| ok.contains(&key_of(patchset.get(hunk))))
    }
}

#[derive(Debug, Clone, Default)]
pub struct TableHarness {
    pub tests: Vec<TableTest>,
    /// Versions that fail to build.
    pub broken: BTreeSet<(HunkId, String)>,
    /// Versions that make every test time out.
    pub hanging: BTreeSet<(HunkId, String)>,
}

impl TableHarness {
    pub fn new(tests: Vec<TableTest>) -> Self {
        TableHarness { tests, ..Default::default() }
    }

    pub fn broken(mut self, hunk: HunkId, text: &str) -> Self {
        self.broken.insert((hunk, normalize_ws(text)));
        self
    }

    pub fn hanging(mut self, hunk: HunkId, text: &str) -> Self {
        self.hanging.insert((hunk, normalize_ws(text)));
        self
    }

    fn hits(set: &BTreeSet<(HunkId, String)>, patchset: &PatchSet) -> bool {
        patchset
            .iter()
            .any(|(h, c)| c.patch_text().is_some_and(|t| set.contains(&(h.clone(), normalize_ws(t)))))
    }

    /// Evaluates without skipping; for oracles.
    pub fn evaluate(&self, patchset: &PatchSet) -> SuiteReport {
        self.run(patchset, &BTreeSet::new()).expect("table harness never fails")
    }
}

impl TestHarness for TableHarness {
    fn run(&self, patchset: &PatchSet, skip: &BTreeSet<TestId>) -> Result<SuiteReport, HarnessError> {
        if Self::hits(&self.broken, patchset) {
            return Ok(SuiteReport::not_compiled(Duration::ZERO));
        }
        let hang = Self::hits(&self.hanging, patchset);
        let outcomes = self
            .tests
            .iter()
            .filter(|t| !skip.contains(&t.id))
            .map(|t| {
                let outcome = match (hang, t.passes(patchset)) {
                    (true, _) => Outcome::Timeout,
                    (false, true) => Outcome::Pass,
                    (false, false) => Outcome::Fail,
                };
                (t.id.clone(), outcome)
            })
            .collect();
        Ok(SuiteReport { compiled: true, outcomes, wall_time: Duration::ZERO })
    }
}

/// Fixed outcomes plus tests whose unpatched outcome flips at random.
#[derive(Debug)]
pub struct FlakyHarness {
    pub stable: BTreeMap<TestId, Outcome>,
    /// Each listed test fails with this probability on every run and
    /// passes otherwise.
    pub flaky: BTreeMap<TestId, f64>,
    /// Every test executed, across all runs.
    pub executed: Mutex<Vec<TestId>>,
    rng: Mutex<ChaCha8Rng>,
}

impl FlakyHarness {
    pub fn new(stable: BTreeMap<TestId, Outcome>, flaky: BTreeMap<TestId, f64>, seed: u64) -> Self {
        FlakyHarness { stable, flaky, executed: Mutex::new(Vec::new()), rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)) }
    }
}

impl TestHarness for FlakyHarness {
    fn run(&self, _patchset: &PatchSet, skip: &BTreeSet<TestId>) -> Result<SuiteReport, HarnessError> {
        let mut outcomes: BTreeMap<TestId, Outcome> = BTreeMap::new();
        let mut rng = self.rng.lock().unwrap();
        for (id, &p) in &self.flaky {
            if !skip.contains(id) {
                let outcome = if rng.random_bool(p) { Outcome::Fail } else { Outcome::Pass };
                outcomes.insert(id.clone(), outcome);
            }
        }
        for (id, &o) in &self.stable {
            if !skip.contains(id) {
                outcomes.insert(id.clone(), o);
            }
        }
        self.executed.lock().unwrap().extend(outcomes.keys().cloned());
        Ok(SuiteReport { compiled: true, outcomes, wall_time: Duration::ZERO })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_semantics() {
        let h = HunkId::new("a", 1);
        let harness = TableHarness::new(vec![TableTest::new("t").accept(h.clone(), &[Some("x  +  1")])])
            .broken(h.clone(), "bad")
            .hanging(h.clone(), "loop");
        let with = |t: &str| PatchSet::from([(h.clone(), Choice::Patch(t.into()))]);
        assert!(harness.evaluate(&with("x + 1")).passes("t"));
        assert!(!harness.evaluate(&PatchSet::new()).passes("t"));
        assert!(!harness.evaluate(&with("bad")).compiled);
        assert!(harness.evaluate(&with("loop")).timed_out());
    }
}
