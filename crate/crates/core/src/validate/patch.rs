//! Applying patch sets to source files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Choice, PatchSet};
use crate::context::LineRange;
use crate::hunk::HunkId;
use crate::text::indentation;

/// A buggy hunk location: `id.path` relative to the project root, lines
/// `range` in that file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HunkSite {
    pub id: HunkId,
    pub range: LineRange,
}

impl HunkSite {
    pub fn new(path: impl Into<String>, range: LineRange) -> Self {
        HunkSite { id: HunkId::new(path, range.start), range }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatchError {
    #[error("no hunk {0} in this bug")]
    UnknownHunk(HunkId),
    #[error("file {0} is not part of the project")]
    MissingFile(String),
    #[error("hunk {hunk} lies outside {path} ({lines} lines)")]
    OutOfBounds { hunk: HunkId, path: String, lines: usize },
    #[error("hunks {0} and {1} overlap")]
    Overlap(HunkId, HunkId),
}

fn overlaps(a: &LineRange, b: &LineRange) -> bool {
    match (a.last(), b.last()) {
        (None, None) => a.start == b.start,
        (Some(a_last), Some(b_last)) => a.start <= b_last && b.start <= a_last,
        _ => a.covers(b) || b.covers(a),
    }
}

/// Checks that every site is inside its file and that sites in one file
/// are disjoint.
pub fn check_sites(files: &BTreeMap<String, String>, sites: &[HunkSite]) -> Result<(), PatchError> {
    for (i, site) in sites.iter().enumerate() {
        let text = files.get(&site.id.path).ok_or_else(|| PatchError::MissingFile(site.id.path.clone()))?;
        let lines = text.lines().count();
        if !site.range.fits(lines) {
            return Err(PatchError::OutOfBounds { hunk: site.id.clone(), path: site.id.path.clone(), lines });
        }
        for other in &sites[..i] {
            if other.id.path == site.id.path && overlaps(&other.range, &site.range) {
                return Err(PatchError::Overlap(other.id.clone(), site.id.clone()));
            }
        }
    }
    Ok(())
}

/// Re-indents `text` for insertion at `indent`: the block's common
/// leading whitespace is replaced by `indent`. Whitespace-only text is a
/// deletion.
pub fn reindent(text: &str, indent: &str) -> Vec<String> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.iter().all(|l| l.trim().is_empty()) {
        return Vec::new();
    }
    let common = lines
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| indentation(l).len())
        .min()
        .unwrap_or(0);
    lines
        .iter()
        .map(|l| if l.trim().is_empty() { String::new() } else { format!("{indent}{}", l[common..].trim_end()) })
        .collect()
}

/// Indentation for replacement lines: that of the first buggy line, or of
/// the deeper-indented neighbour for an insertion.
fn site_indent<'a>(lines: &[&'a str], range: &LineRange) -> &'a str {
    let at = |n: usize| lines.get(n.wrapping_sub(1)).map(|l| indentation(l));
    if !range.is_insertion() {
        return at(range.start).unwrap_or("");
    }
    let before = at(range.start.wrapping_sub(1)).unwrap_or("");
    let after = at(range.start).unwrap_or("");
    if after.len() > before.len() { after } else { before }
}

fn rebuild(original: &str, lines: Vec<String>) -> String {
    let mut out = lines.join("\n");
    if !out.is_empty() && (original.is_empty() || original.ends_with('\n')) {
        out.push('\n');
    }
    out
}

/// Applies `patchset` and returns the new contents of every file that
/// holds a site, patched or not.
pub fn apply_patchset(
    files: &BTreeMap<String, String>,
    sites: &[HunkSite],
    patchset: &PatchSet,
) -> Result<BTreeMap<String, String>, PatchError> {
    check_sites(files, sites)?;
    for id in patchset.keys() {
        if !sites.iter().any(|s| &s.id == id) {
            return Err(PatchError::UnknownHunk(id.clone()));
        }
    }
    let mut out = BTreeMap::new();
    for site in sites {
        out.entry(site.id.path.clone()).or_insert_with(|| files[&site.id.path].clone());
    }
    for (path, text) in out.iter_mut() {
        let original: Vec<&str> = text.lines().collect();
        let mut edits: Vec<(&HunkSite, &str)> = sites
            .iter()
            .filter(|s| &s.id.path == path)
            .filter_map(|s| match patchset.get(&s.id) {
                Some(Choice::Patch(t)) => Some((s, t.as_str())),
                _ => None,
            })
            .collect();
        if edits.is_empty() {
            continue;
        }
        edits.sort_by_key(|(s, _)| std::cmp::Reverse(s.range.start));
        let mut lines: Vec<String> = original.iter().map(|l| l.to_string()).collect();
        for (site, patch) in edits {
            let replacement = reindent(patch, site_indent(&original, &site.range));
            let from = site.range.start - 1;
            lines.splice(from..from + site.range.length, replacement);
        }
        *text = rebuild(text, lines);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn files(path: &str, text: &str) -> BTreeMap<String, String> {
        BTreeMap::from([(path.to_string(), text.to_string())])
    }

    #[test]
    fn replaces_with_original_indentation() {
        let f = files("a.py", "def f(x):\n    return x + 1\n");
        let site = HunkSite::new("a.py", LineRange::new(2, 1));
        let ps = PatchSet::from([(site.id.clone(), Choice::Patch("return x - 1".into()))]);
        let out = apply_patchset(&f, &[site], &ps).unwrap();
        assert_eq!(out["a.py"], "def f(x):\n    return x - 1\n");
    }

    #[test]
    fn multiline_patch_keeps_relative_indent() {
        let f = files("a.py", "def f(x):\n    return x\n");
        let site = HunkSite::new("a.py", LineRange::new(2, 1));
        let ps = PatchSet::from([(site.id.clone(), Choice::Patch("if x:\n    x = 0\nreturn x".into()))]);
        let out = apply_patchset(&f, &[site], &ps).unwrap();
        assert_eq!(out["a.py"], "def f(x):\n    if x:\n        x = 0\n    return x\n");
    }

    #[test]
    fn deletion_and_insertion() {
        let f = files("a.c", "int f() {\n  a();\n  b();\n}\n");
        let del = HunkSite::new("a.c", LineRange::new(2, 1));
        let ins = HunkSite::new("a.c", LineRange::new(4, 0));
        let ps = PatchSet::from([
            (del.id.clone(), Choice::Patch(String::new())),
            (ins.id.clone(), Choice::Patch("c();".into())),
        ]);
        let out = apply_patchset(&f, &[del, ins], &ps).unwrap();
        assert_eq!(out["a.c"], "int f() {\n  b();\n  c();\n}\n");
    }

    #[test]
    fn source_choice_leaves_file_alone() {
        let f = files("a.c", "x;\ny;\n");
        let site = HunkSite::new("a.c", LineRange::new(1, 1));
        let out = apply_patchset(&f, std::slice::from_ref(&site), &PatchSet::from([(site.id.clone(), Choice::Source)])).unwrap();
        assert_eq!(out["a.c"], "x;\ny;\n");
    }

    #[test]
    fn rejects_overlap_and_unknown() {
        let f = files("a.c", "1\n2\n3\n");
        let a = HunkSite::new("a.c", LineRange::new(1, 2));
        let b = HunkSite::new("a.c", LineRange::new(2, 1));
        assert!(matches!(check_sites(&f, &[a.clone(), b]), Err(PatchError::Overlap(..))));
        let ins = HunkSite::new("a.c", LineRange::new(2, 0));
        assert!(matches!(check_sites(&f, &[a.clone(), ins]), Err(PatchError::Overlap(..))));
        let edge = HunkSite::new("a.c", LineRange::new(3, 0));
        assert!(check_sites(&f, &[a.clone(), edge]).is_ok());
        let stray = PatchSet::from([(HunkId::new("b.c", 1), Choice::Source)]);
        assert!(matches!(apply_patchset(&f, &[a], &stray), Err(PatchError::UnknownHunk(_))));
        let far = HunkSite::new("a.c", LineRange::new(3, 2));
        assert!(matches!(check_sites(&f, &[far]), Err(PatchError::OutOfBounds { .. })));
    }
}
