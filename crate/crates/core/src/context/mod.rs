//! Surrounding context for a buggy hunk.
//!
//! A hunk inside a function gets the whole outermost enclosing function.
//! A hunk outside any function (top level, class body) gets a window of
//! three lines on each side. Functions are found by lightweight per-language
//! scanners behind [`FunctionScanner`], so a real parser can be swapped in.

mod braces;
mod python;

use serde::{Deserialize, Serialize};

use crate::lang::Language;

pub use braces::BraceScanner;
pub use python::IndentScanner;

/// Lines on each side of a hunk in a window context.
pub const WINDOW_RADIUS: usize = 3;

/// A run of lines in a file. `start` is 1-based; a zero `length` marks an
/// insertion point just before line `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LineRange {
    pub start: usize,
    pub length: usize,
}

impl LineRange {
    pub fn new(start: usize, length: usize) -> Self {
        LineRange { start, length }
    }

    /// Inclusive range from `first` to `last`.
    pub fn inclusive(first: usize, last: usize) -> Self {
        LineRange { start: first, length: last + 1 - first }
    }

    /// Last covered line, or `None` for an insertion point.
    pub fn last(&self) -> Option<usize> {
        (self.length > 0).then(|| self.start + self.length - 1)
    }

    pub fn is_insertion(&self) -> bool {
        self.length == 0
    }

    /// Whether `self` lies within a file of `line_count` lines.
    pub fn fits(&self, line_count: usize) -> bool {
        self.start >= 1
            && match self.last() {
                Some(last) => last <= line_count,
                None => self.start <= line_count + 1,
            }
    }

    /// Whether `inner` is covered by `self`. An insertion point is covered
    /// when both of its neighbouring lines are.
    pub fn covers(&self, inner: &LineRange) -> bool {
        let Some(last) = self.last() else { return false };
        match inner.last() {
            Some(inner_last) => self.start <= inner.start && inner_last <= last,
            None => self.start < inner.start && inner.start <= last,
        }
    }

    /// The covered lines of `lines` (1-based indexing).
    pub fn slice<'a, S: AsRef<str>>(&self, lines: &'a [S]) -> Vec<&'a str> {
        match self.last() {
            Some(last) => lines[self.start - 1..last].iter().map(AsRef::as_ref).collect(),
            None => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextKind {
    EnclosingFunction,
    Window,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSpan {
    pub kind: ContextKind,
    pub range: LineRange,
    pub text: String,
}

/// A function definition found by a scanner: inclusive 1-based lines,
/// decorators and annotations included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FunctionSpan {
    pub first: usize,
    pub last: usize,
}

impl FunctionSpan {
    pub fn range(&self) -> LineRange {
        LineRange::inclusive(self.first, self.last)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot scan source at line {line}: {reason}")]
pub struct ScanError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ContextError {
    #[error("hunk at line {start} (length {length}) is outside a {lines}-line file")]
    OutOfBounds { start: usize, length: usize, lines: usize },
    #[error(transparent)]
    Scan(#[from] ScanError),
}

/// Finds function definitions in a source file.
pub trait FunctionScanner: Send + Sync {
    /// Every function definition, nested ones included, in any order.
    fn functions(&self, source: &str) -> Result<Vec<FunctionSpan>, ScanError>;
}

static JAVA: BraceScanner = BraceScanner::new(Language::Java);
static C: BraceScanner = BraceScanner::new(Language::C);
static JAVASCRIPT: BraceScanner = BraceScanner::new(Language::JavaScript);
static PYTHON: IndentScanner = IndentScanner;

/// The built-in scanner for `lang`.
pub fn scanner_for(lang: Language) -> &'static dyn FunctionScanner {
    match lang {
        Language::Java => &JAVA,
        Language::C => &C,
        Language::JavaScript => &JAVASCRIPT,
        Language::Python => &PYTHON,
    }
}

fn check_bounds(source: &str, hunk: LineRange) -> Result<Vec<&str>, ContextError> {
    let lines: Vec<&str> = source.lines().collect();
    if !hunk.fits(lines.len()) {
        return Err(ContextError::OutOfBounds { start: hunk.start, length: hunk.length, lines: lines.len() });
    }
    Ok(lines)
}

/// The outermost function whose span covers `hunk`, using `scanner`.
pub fn enclosing_function_with(
    scanner: &dyn FunctionScanner,
    source: &str,
    hunk: LineRange,
) -> Result<Option<ContextSpan>, ContextError> {
    let lines = check_bounds(source, hunk)?;
    let functions = scanner.functions(source)?;
    let outer = functions
        .iter()
        .map(FunctionSpan::range)
        .filter(|r| r.covers(&hunk))
        .min_by_key(|r| (r.start, std::cmp::Reverse(r.length)));
    Ok(outer.map(|range| ContextSpan {
        kind: ContextKind::EnclosingFunction,
        text: range.slice(&lines).join("\n"),
        range,
    }))
}

/// The outermost function whose span covers `hunk`, if any.
pub fn enclosing_function(source: &str, hunk: LineRange, lang: Language) -> Result<Option<ContextSpan>, ContextError> {
    enclosing_function_with(scanner_for(lang), source, hunk)
}

/// Three lines before the hunk, the hunk, and three lines after, clamped to
/// the file.
pub fn window_context(source: &str, hunk: LineRange) -> Result<ContextSpan, ContextError> {
    let lines = check_bounds(source, hunk)?;
    let first = hunk.start.saturating_sub(WINDOW_RADIUS).max(1);
    let last = (hunk.start + hunk.length + WINDOW_RADIUS - 1).min(lines.len());
    let range = if lines.is_empty() || last < first {
        LineRange::new(first.min(lines.len().max(1)), 0)
    } else {
        LineRange::inclusive(first, last)
    };
    Ok(ContextSpan { kind: ContextKind::Window, text: range.slice(&lines).join("\n"), range })
}

/// Context for `hunk` plus a warning when the scanner gave up and the
/// window fallback was used.
pub fn resolve_context(
    source: &str,
    hunk: LineRange,
    lang: Language,
) -> Result<(ContextSpan, Option<String>), ContextError> {
    match enclosing_function(source, hunk, lang) {
        Ok(Some(span)) => Ok((span, None)),
        Ok(None) => Ok((window_context(source, hunk)?, None)),
        Err(ContextError::Scan(err)) => {
            let warning = format!("{lang} scanner failed ({err}); using window context");
            tracing::warn!("{warning}");
            Ok((window_context(source, hunk)?, Some(warning)))
        }
        Err(err) => Err(err),
    }
}

/// Enclosing function if there is one, otherwise the line window.
pub fn context_for_hunk(source: &str, hunk: LineRange, lang: Language) -> Result<ContextSpan, ContextError> {
    resolve_context(source, hunk, lang).map(|(span, _)| span)
}
