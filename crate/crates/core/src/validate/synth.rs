//! Random synthetic bugs over the table harness.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::table::{Key, TableHarness, TableTest};
use crate::generate::CandidatePatch;
use crate::hunk::HunkId;
use crate::rank::{merge_candidates, MergedCandidate};

#[derive(Debug, Clone, Copy)]
pub struct SynthParams {
    pub min_hunks: usize,
    pub max_hunks: usize,
    /// Upper bound on each merged list, deletion patch included.
    pub max_candidates: usize,
    pub max_tests: usize,
    /// Size of the shared text pool; small pools give more uniform hits.
    pub vocabulary: usize,
    /// Chance that a solution combination is planted into the tests.
    pub plant: f64,
    pub broken: f64,
    pub hanging: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            min_hunks: 1,
            max_hunks: 4,
            max_candidates: 20,
            max_tests: 6,
            vocabulary: 12,
            plant: 0.7,
            broken: 0.05,
            hanging: 0.02,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticBug {
    pub hunks: Vec<HunkId>,
    pub sources: Vec<String>,
    pub per_hunk: Vec<Vec<MergedCandidate>>,
    pub harness: TableHarness,
}

impl SyntheticBug {
    /// Every version a hunk can hold: source, then its candidates.
    pub fn versions(&self, hunk: usize) -> Vec<Key> {
        std::iter::once(None).chain(self.per_hunk[hunk].iter().map(|c| Some(c.normalized.clone()))).collect()
    }
}

fn text(i: usize) -> String {
    format!("v{i} ( ) ;")
}

/// A random ensemble of beams (checkpoints × beam entries) with repeated
/// texts, whitespace variants, score ties and copies of `source`.
pub fn random_ensemble<R: Rng>(rng: &mut R, k: usize, t: usize, vocabulary: usize, source: &str) -> Vec<Vec<CandidatePatch>> {
    (1..=k)
        .map(|checkpoint| {
            let len = rng.random_range(0..=t);
            let mut score = 0.0;
            (1..=len)
                .map(|rank| {
                    if rng.random_bool(0.7) {
                        score -= f64::from(rng.random_range(0..3u8)) * 0.25;
                    }
                    let text = match rng.random_range(0..10) {
                        0 => source.to_string(),
                        1 => String::new(),
                        2 => format!("  {} ", text(rng.random_range(0..vocabulary)).replace(' ', "  ")),
                        _ => text(rng.random_range(0..vocabulary)),
                    };
                    CandidatePatch { normalized: crate::text::normalize_ws(&text), text, checkpoint, rank, score }
                })
                .collect()
        })
        .collect()
}

/// Draws one synthetic bug.
pub fn random_bug<R: Rng>(rng: &mut R, p: &SynthParams) -> SyntheticBug {
    let h = rng.random_range(p.min_hunks..=p.max_hunks);
    let hunks: Vec<HunkId> = (0..h).map(|i| HunkId::new(format!("f{}.c", i % 2), 10 * (i + 1))).collect();
    let sources: Vec<String> = (0..h).map(|i| format!("src{i} ;")).collect();
    let per_hunk: Vec<Vec<MergedCandidate>> = sources
        .iter()
        .map(|src| {
            let k = rng.random_range(1..=3);
            let beams = random_ensemble(rng, k, p.max_candidates, p.vocabulary, src);
            let mut merged = merge_candidates(&beams, src);
            merged.truncate(p.max_candidates);
            merged
        })
        .collect();

    let mut bug = SyntheticBug { hunks, sources, per_hunk, harness: TableHarness::default() };
    let versions: Vec<Vec<Key>> = (0..h).map(|i| bug.versions(i)).collect();
    let solution: Option<Vec<Key>> = rng
        .random_bool(p.plant)
        .then(|| versions.iter().map(|v| v.choose(rng).cloned().flatten()).collect::<Vec<Key>>())
        .filter(|sol| sol.iter().any(Option::is_some));

    let n_tests = rng.random_range(1..=p.max_tests);
    let mut tests = Vec::with_capacity(n_tests);
    for n in 0..n_tests {
        let trigger = n == 0 || rng.random_bool(0.5);
        let mut deps: Vec<usize> = (0..h).collect();
        deps.shuffle(rng);
        deps.truncate(rng.random_range(1..=h));
        if trigger {
            // The first dependency is the one that fails on the source; with
            // a planted solution it must be a hunk the solution edits.
            if let Some(sol) = &solution {
                let edited: Vec<usize> = (0..h).filter(|&i| sol[i].is_some()).collect();
                let pick = *edited.choose(rng).expect("solution edits a hunk");
                deps.retain(|&d| d != pick);
                deps.insert(0, pick);
            }
        }
        let mut test = TableTest::new(format!("t{n}"));
        for (j, &hunk) in deps.iter().enumerate() {
            let mut ok: BTreeSet<Key> = versions[hunk].iter().filter(|_| rng.random_bool(0.3)).cloned().collect();
            if trigger && j == 0 {
                ok.remove(&None);
            } else if !trigger {
                ok.insert(None);
            }
            if let Some(sol) = &solution {
                ok.insert(sol[hunk].clone());
            }
            test.accepted.insert(bug.hunks[hunk].clone(), ok);
        }
        tests.push(test);
    }
    bug.harness.tests = tests;

    for (i, list) in bug.per_hunk.iter().enumerate() {
        for cand in list {
            let planted = solution.as_ref().is_some_and(|s| s[i].as_deref() == Some(cand.normalized.as_str()));
            if planted {
                continue;
            }
            if rng.random_bool(p.broken) {
                bug.harness.broken.insert((bug.hunks[i].clone(), cand.normalized.clone()));
            } else if rng.random_bool(p.hanging) {
                bug.harness.hanging.insert((bug.hunks[i].clone(), cand.normalized.clone()));
            }
        }
    }
    bug
}
