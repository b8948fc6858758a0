//! Candidate merging across checkpoints and cross-hunk uniform patches.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::generate::CandidatePatch;
pub use crate::text::normalize_ws;

/// Where a merged candidate was generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub checkpoint: usize,
    pub rank: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedCandidate {
    pub normalized: String,
    /// Spelling of the highest-ranked member of the group.
    pub display: String,
    /// Beam position of the highest-ranked member; `None` for the
    /// synthetic deletion patch when no checkpoint proposed a deletion.
    pub best_rank: Option<usize>,
    pub best_score: Option<f64>,
    /// Every generated member of the group, in merge order.
    pub provenance: Vec<Provenance>,
}

impl MergedCandidate {
    pub fn is_deletion(&self) -> bool {
        self.normalized.is_empty()
    }
}

fn merge_order(a: &CandidatePatch, b: &CandidatePatch) -> Ordering {
    a.rank
        .cmp(&b.rank)
        .then_with(|| b.score.total_cmp(&a.score))
        .then_with(|| a.checkpoint.cmp(&b.checkpoint))
}

/// Merges per-checkpoint beams into one ranked list for a hunk:
///
/// 1. sort every candidate by beam position, then score (higher first),
///    then checkpoint index;
/// 2. drop candidates equal to the source hunk after whitespace
///    normalization;
/// 3. keep the first of each group of normalized duplicates;
/// 4. when the source hunk is non-empty, put the deletion patch first.
pub fn merge_candidates(per_checkpoint: &[Vec<CandidatePatch>], source_hunk: &str) -> Vec<MergedCandidate> {
    let source = normalize_ws(source_hunk);
    let mut all: Vec<&CandidatePatch> = per_checkpoint.iter().flatten().collect();
    all.sort_by(|a, b| merge_order(a, b));

    let mut merged: Vec<MergedCandidate> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    let insert_deletion = !source.is_empty();
    if insert_deletion {
        merged.push(MergedCandidate {
            normalized: String::new(),
            display: String::new(),
            best_rank: None,
            best_score: None,
            provenance: Vec::new(),
        });
        slot.insert(String::new(), 0);
    }
    for cand in all {
        let normalized = normalize_ws(&cand.text);
        if normalized == source {
            continue;
        }
        let prov = Provenance { checkpoint: cand.checkpoint, rank: cand.rank, score: cand.score };
        match slot.get(&normalized) {
            Some(&i) => {
                let entry = &mut merged[i];
                if entry.best_rank.is_none() {
                    entry.best_rank = Some(cand.rank);
                    entry.best_score = Some(cand.score);
                }
                entry.provenance.push(prov);
            }
            None => {
                slot.insert(normalized.clone(), merged.len());
                merged.push(MergedCandidate {
                    display: cand.text.clone(),
                    normalized,
                    best_rank: Some(cand.rank),
                    best_score: Some(cand.score),
                    provenance: vec![prov],
                });
            }
        }
    }
    merged
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformCandidate {
    pub normalized: String,
    /// Sum over hunks of the candidate's 1-based position in each list.
    pub rank_sum: usize,
    /// Best sequence score across hunks, if any hunk has one.
    pub max_score: Option<f64>,
}

fn score_desc(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Candidates present in every hunk's merged list, ordered by rank sum,
/// then maximum score (higher first), then normalized text.
pub fn uniform_candidates(per_hunk: &[Vec<MergedCandidate>]) -> Vec<UniformCandidate> {
    let Some((first, rest)) = per_hunk.split_first() else { return Vec::new() };
    let positions: Vec<HashMap<&str, (usize, Option<f64>)>> = per_hunk
        .iter()
        .map(|list| {
            list.iter()
                .enumerate()
                .map(|(i, c)| (c.normalized.as_str(), (i + 1, c.best_score)))
                .collect()
        })
        .collect();
    let mut seen = HashSet::new();
    let mut out: Vec<UniformCandidate> = first
        .iter()
        .filter(|c| seen.insert(c.normalized.as_str()))
        .filter(|c| rest.iter().enumerate().all(|(i, _)| positions[i + 1].contains_key(c.normalized.as_str())))
        .map(|c| {
            let mut rank_sum = 0;
            let mut max_score: Option<f64> = None;
            for pos in &positions {
                let (p, s) = pos[c.normalized.as_str()];
                rank_sum += p;
                if let Some(s) = s {
                    max_score = Some(max_score.map_or(s, |m| m.max(s)));
                }
            }
            UniformCandidate { normalized: c.normalized.clone(), rank_sum, max_score }
        })
        .collect();
    out.sort_by(|a, b| {
        a.rank_sum
            .cmp(&b.rank_sum)
            .then_with(|| score_desc(a.max_score, b.max_score))
            .then_with(|| a.normalized.cmp(&b.normalized))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(text: &str, checkpoint: usize, rank: usize, score: f64) -> CandidatePatch {
        CandidatePatch { text: text.into(), normalized: normalize_ws(text), checkpoint, rank, score }
    }

    fn texts(list: &[MergedCandidate]) -> Vec<&str> {
        list.iter().map(|c| c.normalized.as_str()).collect()
    }

    #[test]
    fn worked_merge_example() {
        let a = vec![cand("x=1", 1, 1, -0.1), cand("x=2", 1, 2, -0.5)];
        let b = vec![cand("x=2", 2, 1, -0.2), cand("x=3", 2, 2, -0.9)];
        let merged = merge_candidates(&[a, b], "x=0");
        assert_eq!(texts(&merged), vec!["", "x=1", "x=2", "x=3"]);
        assert_eq!(merged[2].best_rank, Some(1));
        assert_eq!(merged[2].best_score, Some(-0.2));
        assert_eq!(merged[2].provenance.len(), 2);
    }

    #[test]
    fn source_identical_candidate_leaves_only_deletion() {
        let merged = merge_candidates(&[vec![cand("x =  0", 1, 1, -0.1)]], "x = 0");
        assert_eq!(texts(&merged), vec![""]);
    }

    #[test]
    fn insertion_point_gets_no_deletion_patch() {
        let merged = merge_candidates(&[vec![cand("y=2;", 1, 1, -0.1)]], "");
        assert_eq!(texts(&merged), vec!["y=2;"]);
    }

    #[test]
    fn generated_deletion_merges_into_the_synthetic_one() {
        let merged = merge_candidates(&[vec![cand("a", 1, 1, -0.1), cand("  ", 1, 2, -0.2)]], "z");
        assert_eq!(texts(&merged), vec!["", "a"]);
        assert_eq!(merged[0].best_rank, Some(2));
        assert_eq!(merged.iter().filter(|c| c.is_deletion()).count(), 1);
    }

    fn merged(items: &[(&str, f64)]) -> Vec<MergedCandidate> {
        items
            .iter()
            .enumerate()
            .map(|(i, (t, s))| MergedCandidate {
                normalized: t.to_string(),
                display: t.to_string(),
                best_rank: Some(i + 1),
                best_score: Some(*s),
                provenance: vec![],
            })
            .collect()
    }

    #[test]
    fn uniform_tie_breaks_on_max_score() {
        let l1 = merged(&[("p", -0.3), ("q", -0.2)]);
        let l2 = merged(&[("q", -0.1), ("p", -0.4)]);
        let u = uniform_candidates(&[l1, l2]);
        assert_eq!(u.iter().map(|c| c.normalized.as_str()).collect::<Vec<_>>(), vec!["q", "p"]);
        assert_eq!(u[0].rank_sum, 3);
        assert_eq!(u[0].max_score, Some(-0.1));
        assert_eq!(u[1].max_score, Some(-0.3));
    }

    #[test]
    fn disjoint_lists_share_only_deletion() {
        let a = merge_candidates(&[vec![cand("a", 1, 1, -0.1)]], "s1");
        let b = merge_candidates(&[vec![cand("b", 1, 1, -0.1)]], "s2");
        let u = uniform_candidates(&[a, b]);
        assert_eq!(u.len(), 1);
        assert_eq!(u[0].normalized, "");
        assert_eq!(u[0].rank_sum, 2);
    }

    #[test]
    fn empty_hunk_list_means_no_uniform() {
        let a = merged(&[("p", -0.3)]);
        assert!(uniform_candidates(&[a, vec![]]).is_empty());
    }
}
