//! Line diffs: zero-context hunk extraction, unified-diff rendering,
//! parsing and strict application.

use std::fmt::Write as _;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DiffError {
    #[error("malformed unified diff at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("hunk {hunk} of `{path}` does not apply: {reason}")]
    Conflict { path: String, hunk: usize, reason: String },
}

/// One maximal region of change between two line sequences.
///
/// `old_start` is 1-based. When `old_lines` is empty the hunk is a pure
/// insertion placed before old line `old_start` (which may be one past the
/// last line).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    pub old_start: usize,
    pub old_lines: Vec<String>,
    pub new_start: usize,
    pub new_lines: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Equal,
    Delete,
    Insert,
}

/// Above this many DP cells the middle section is reported as a single
/// replacement instead of being aligned.
const MAX_DP_CELLS: usize = 64 * 1024 * 1024;

/// Edit script turning `old` into `new`, from a longest common subsequence.
/// Among equal-length alignments deletions are emitted before insertions.
fn edit_script<S: AsRef<str>, T: AsRef<str>>(old: &[S], new: &[T]) -> Vec<Op> {
    let eq = |i: usize, j: usize| old[i].as_ref() == new[j].as_ref();
    let (n, m) = (old.len(), new.len());
    let mut prefix = 0;
    while prefix < n && prefix < m && eq(prefix, prefix) {
        prefix += 1;
    }
    let mut suffix = 0;
    while suffix < n - prefix && suffix < m - prefix && eq(n - 1 - suffix, m - 1 - suffix) {
        suffix += 1;
    }
    let (a0, a1, b0, b1) = (prefix, n - suffix, prefix, m - suffix);
    let (rows, cols) = (a1 - a0, b1 - b0);

    let mut ops = vec![Op::Equal; prefix];
    if rows * cols > MAX_DP_CELLS {
        ops.extend(std::iter::repeat_n(Op::Delete, rows));
        ops.extend(std::iter::repeat_n(Op::Insert, cols));
    } else {
        // lcs[i][j] = LCS length of old[a0+i..a1] and new[b0+j..b1]
        let width = cols + 1;
        let mut lcs = vec![0u32; (rows + 1) * width];
        for i in (0..rows).rev() {
            for j in (0..cols).rev() {
                lcs[i * width + j] = if eq(a0 + i, b0 + j) {
                    lcs[(i + 1) * width + j + 1] + 1
                } else {
                    lcs[(i + 1) * width + j].max(lcs[i * width + j + 1])
                };
            }
        }
        let (mut i, mut j) = (0, 0);
        while i < rows || j < cols {
            if i < rows && j < cols && eq(a0 + i, b0 + j) {
                ops.push(Op::Equal);
                i += 1;
                j += 1;
            } else if j == cols || (i < rows && lcs[(i + 1) * width + j] >= lcs[i * width + j + 1]) {
                ops.push(Op::Delete);
                i += 1;
            } else {
                ops.push(Op::Insert);
                j += 1;
            }
        }
    }
    ops.extend(std::iter::repeat_n(Op::Equal, suffix));
    ops
}

/// Zero-context hunks between `old` and `new`, in file order.
pub fn diff_lines<S: AsRef<str>, T: AsRef<str>>(old: &[S], new: &[T]) -> Vec<Hunk> {
    let ops = edit_script(old, new);
    let mut hunks = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    let mut k = 0;
    while k < ops.len() {
        if ops[k] == Op::Equal {
            i += 1;
            j += 1;
            k += 1;
            continue;
        }
        let mut hunk = Hunk { old_start: i + 1, old_lines: Vec::new(), new_start: j + 1, new_lines: Vec::new() };
        while k < ops.len() && ops[k] != Op::Equal {
            match ops[k] {
                Op::Delete => {
                    hunk.old_lines.push(old[i].as_ref().to_string());
                    i += 1;
                }
                Op::Insert => {
                    hunk.new_lines.push(new[j].as_ref().to_string());
                    j += 1;
                }
                Op::Equal => unreachable!(),
            }
            k += 1;
        }
        hunks.push(hunk);
    }
    hunks
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiffLine {
    Context(String),
    Removed(String),
    Added(String),
}

/// A hunk as written in a unified diff. Starts are 1-based; a zero-length
/// side uses the unified convention (start = line *before* the change).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnifiedHunk {
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
    pub lines: Vec<DiffLine>,
}

impl UnifiedHunk {
    /// Old-side text covered by this hunk (context and removed lines).
    pub fn old_side(&self) -> Vec<&str> {
        self.lines
            .iter()
            .filter_map(|l| match l {
                DiffLine::Context(s) | DiffLine::Removed(s) => Some(s.as_str()),
                DiffLine::Added(_) => None,
            })
            .collect()
    }

    pub fn new_side(&self) -> Vec<&str> {
        self.lines
            .iter()
            .filter_map(|l| match l {
                DiffLine::Context(s) | DiffLine::Added(s) => Some(s.as_str()),
                DiffLine::Removed(_) => None,
            })
            .collect()
    }

    /// First old line (1-based) covered by the hunk body.
    pub fn old_first_line(&self) -> usize {
        if self.old_len == 0 { self.old_start + 1 } else { self.old_start }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilePatch {
    pub old_path: String,
    pub new_path: String,
    pub hunks: Vec<UnifiedHunk>,
}

/// Renders a unified diff of `old` → `new` with `context` lines around each
/// change. Returns an empty string when the texts are equal.
pub fn unified_diff(old_path: &str, new_path: &str, old: &str, new: &str, context: usize) -> String {
    let a: Vec<&str> = old.lines().collect();
    let b: Vec<&str> = new.lines().collect();
    let ops = edit_script(&a, &b);
    if ops.iter().all(|&op| op == Op::Equal) {
        return String::new();
    }
    // Position of every op in both files.
    let mut pos = Vec::with_capacity(ops.len());
    let (mut i, mut j) = (0, 0);
    for &op in &ops {
        pos.push((i, j));
        match op {
            Op::Equal => {
                i += 1;
                j += 1;
            }
            Op::Delete => i += 1,
            Op::Insert => j += 1,
        }
    }
    // Group changed ops with their context windows.
    let changed: Vec<usize> = (0..ops.len()).filter(|&k| ops[k] != Op::Equal).collect();
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for &k in &changed {
        let lo = k.saturating_sub(context);
        let hi = (k + context + 1).min(ops.len());
        match groups.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => groups.push((lo, hi)),
        }
    }

    let mut out = String::new();
    let _ = writeln!(out, "--- {old_path}");
    let _ = writeln!(out, "+++ {new_path}");
    for (lo, hi) in groups {
        let (oi, nj) = pos[lo];
        let old_len = ops[lo..hi].iter().filter(|&&o| o != Op::Insert).count();
        let new_len = ops[lo..hi].iter().filter(|&&o| o != Op::Delete).count();
        let old_start = if old_len == 0 { oi } else { oi + 1 };
        let new_start = if new_len == 0 { nj } else { nj + 1 };
        let _ = writeln!(out, "@@ -{old_start},{old_len} +{new_start},{new_len} @@");
        for k in lo..hi {
            let (pi, pj) = pos[k];
            match ops[k] {
                Op::Equal => {
                    let _ = writeln!(out, " {}", a[pi]);
                }
                Op::Delete => {
                    let _ = writeln!(out, "-{}", a[pi]);
                }
                Op::Insert => {
                    let _ = writeln!(out, "+{}", b[pj]);
                }
            }
        }
    }
    out
}

fn parse_range(spec: &str, line: usize) -> Result<(usize, usize), DiffError> {
    let bad = || DiffError::Malformed { line, reason: format!("bad range `{spec}`") };
    let (start, len) = match spec.split_once(',') {
        Some((s, l)) => (s, l),
        None => (spec, "1"),
    };
    Ok((start.parse().map_err(|_| bad())?, len.parse().map_err(|_| bad())?))
}

fn strip_path_prefix(path: &str) -> String {
    let path = path.split('\t').next().unwrap_or(path).trim();
    path.strip_prefix("a/").or_else(|| path.strip_prefix("b/")).unwrap_or(path).to_string()
}

/// Parses every file section of a unified diff. Git headers and other
/// preamble lines are skipped.
pub fn parse_unified(text: &str) -> Result<Vec<FilePatch>, DiffError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut files = Vec::new();
    let mut k = 0;
    while k < lines.len() {
        let Some(old) = lines[k].strip_prefix("--- ") else {
            k += 1;
            continue;
        };
        let Some(new) = lines.get(k + 1).and_then(|l| l.strip_prefix("+++ ")) else {
            return Err(DiffError::Malformed { line: k + 2, reason: "expected `+++` header".into() });
        };
        let mut patch = FilePatch { old_path: strip_path_prefix(old), new_path: strip_path_prefix(new), hunks: Vec::new() };
        k += 2;
        while k < lines.len() && lines[k].starts_with("@@") {
            let header = lines[k];
            let lineno = k + 1;
            let inner = header
                .strip_prefix("@@ ")
                .and_then(|h| h.split_once(" @@"))
                .map(|(r, _)| r)
                .ok_or_else(|| DiffError::Malformed { line: lineno, reason: "bad hunk header".into() })?;
            let (o, n) = inner
                .split_once(' ')
                .ok_or_else(|| DiffError::Malformed { line: lineno, reason: "bad hunk header".into() })?;
            let (old_start, old_len) = parse_range(o.trim_start_matches('-'), lineno)?;
            let (new_start, new_len) = parse_range(n.trim_start_matches('+'), lineno)?;
            let mut hunk = UnifiedHunk { old_start, old_len, new_start, new_len, lines: Vec::new() };
            k += 1;
            let (mut seen_old, mut seen_new) = (0, 0);
            while (seen_old < old_len || seen_new < new_len) && k < lines.len() {
                let l = lines[k];
                if l.starts_with('\\') {
                    k += 1;
                    continue;
                }
                let (tag, body) = match l.char_indices().nth(1) {
                    Some((idx, _)) => (&l[..idx], &l[idx..]),
                    None => (l, ""),
                };
                match tag {
                    " " | "" => {
                        hunk.lines.push(DiffLine::Context(body.to_string()));
                        seen_old += 1;
                        seen_new += 1;
                    }
                    "-" => {
                        hunk.lines.push(DiffLine::Removed(body.to_string()));
                        seen_old += 1;
                    }
                    "+" => {
                        hunk.lines.push(DiffLine::Added(body.to_string()));
                        seen_new += 1;
                    }
                    _ => return Err(DiffError::Malformed { line: k + 1, reason: format!("unexpected line `{l}`") }),
                }
                k += 1;
            }
            if seen_old != old_len || seen_new != new_len {
                return Err(DiffError::Malformed { line: lineno, reason: "hunk body shorter than header".into() });
            }
            while k < lines.len() && lines[k].starts_with('\\') {
                k += 1;
            }
            patch.hunks.push(hunk);
        }
        files.push(patch);
    }
    Ok(files)
}

/// Applies `patch` to `old` without any fuzz: every context and removed
/// line must match exactly. The trailing-newline state of `old` is kept.
pub fn apply(old: &str, patch: &FilePatch) -> Result<String, DiffError> {
    let src: Vec<&str> = old.lines().collect();
    let mut out: Vec<String> = Vec::with_capacity(src.len());
    let mut cursor = 0; // next unconsumed old line, 0-based
    for (idx, hunk) in patch.hunks.iter().enumerate() {
        let conflict = |reason: String| DiffError::Conflict { path: patch.old_path.clone(), hunk: idx + 1, reason };
        let begin = hunk.old_first_line() - 1;
        if begin < cursor || begin > src.len() {
            return Err(conflict(format!("start line {} out of order or range", hunk.old_start)));
        }
        out.extend(src[cursor..begin].iter().map(|s| s.to_string()));
        cursor = begin;
        for line in &hunk.lines {
            match line {
                DiffLine::Context(s) | DiffLine::Removed(s) => {
                    match src.get(cursor) {
                        Some(actual) if actual == s => {}
                        Some(actual) => return Err(conflict(format!("expected `{s}`, found `{actual}`"))),
                        None => return Err(conflict("unexpected end of file".into())),
                    }
                    if let DiffLine::Context(s) = line {
                        out.push(s.clone());
                    }
                    cursor += 1;
                }
                DiffLine::Added(s) => out.push(s.clone()),
            }
        }
    }
    out.extend(src[cursor..].iter().map(|s| s.to_string()));
    let keep_newline = !out.is_empty() && (old.is_empty() || old.ends_with('\n'));
    let mut text = out.join("\n");
    if keep_newline {
        text.push('\n');
    }
    Ok(text)
}
