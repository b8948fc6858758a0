//! Dense retrieval of lines from the buggy file.
//!
//! Lines outside the hunk's surrounding context are embedded and indexed;
//! the hunk is embedded the same way and the most similar lines above a
//! cosine threshold are returned. The embedding backend is pluggable; the
//! reference backend is an L2-normalized term-frequency vector.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::context::ContextSpan;
use crate::par::{self, Execution};
use crate::text::{has_alphanumeric, normalize_ws};

/// Default number of retrieved lines.
pub const DEFAULT_TOP_R: usize = 5;
/// Default minimum cosine similarity.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Similarities are snapped to this grid so that values such as 1/2 come
/// out exact despite rounding in the normalized weights.
const SIMILARITY_GRID: f64 = 1e12;

/// Indexes smaller than this are scored on the calling thread.
const PARALLEL_MIN_ENTRIES: usize = 2048;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    Empty,
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("index cache I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("index cache record {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("unsupported index cache header: {0}")]
    Header(String),
}

/// Sparse embedding: `(dimension, weight)` pairs sorted by dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineVector {
    pub weights: Vec<(String, f64)>,
}

impl LineVector {
    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &LineVector) -> f64 {
        let (a, b) = (&self.weights, &other.weights);
        let (mut i, mut j, mut sum) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }
}

/// Cosine similarity of two embeddings.
pub fn cosine(a: &LineVector, b: &LineVector) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        0.0
    } else {
        a.dot(b) / denom
    }
}

/// Turns a line of code into a vector.
pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<LineVector, EmbedError>;
}

/// Lowercased alphanumeric tokens, term frequencies, L2-normalized.
#[derive(Debug, Clone, Copy, Default)]
pub struct TermFrequencyEmbedder;

impl Embedder for TermFrequencyEmbedder {
    fn embed(&self, text: &str) -> Result<LineVector, EmbedError> {
        let lower = text.to_lowercase();
        let mut counts: BTreeMap<&str, f64> = BTreeMap::new();
        for token in lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            *counts.entry(token).or_default() += 1.0;
        }
        if counts.is_empty() {
            return Err(EmbedError::Empty);
        }
        let norm = counts.values().map(|c| c * c).sum::<f64>().sqrt();
        Ok(LineVector { weights: counts.into_iter().map(|(t, c)| (t.to_string(), c / norm)).collect() })
    }
}

/// Embeds with the reference backend.
pub fn embed(text: &str) -> Result<LineVector, EmbedError> {
    TermFrequencyEmbedder.embed(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    /// Whitespace-normalized line text.
    pub text: String,
    pub line_no: usize,
    pub vector: LineVector,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LineIndex {
    pub file_id: String,
    pub entries: Vec<IndexEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedLine {
    pub text: String,
    pub similarity: f64,
    pub line_no: usize,
}

/// Indexes the lines of `source` outside `excluded`, skipping lines with
/// no alphanumeric character, repeats of an earlier line (after whitespace
/// normalization), and lines equal to the hunk.
pub fn build_line_index_with(
    embedder: &dyn Embedder,
    file_id: &str,
    source: &str,
    excluded: &ContextSpan,
    hunk_text: &str,
) -> LineIndex {
    let hunk_norm = normalize_ws(hunk_text);
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        if excluded.range.covers(&crate::context::LineRange::new(line_no, 1)) {
            continue;
        }
        let text = normalize_ws(line);
        if !has_alphanumeric(&text) || !seen.insert(text.clone()) || text == hunk_norm {
            continue;
        }
        if let Ok(vector) = embedder.embed(&text) {
            entries.push(IndexEntry { text, line_no, vector });
        }
    }
    LineIndex { file_id: file_id.to_string(), entries }
}

pub fn build_line_index(source: &str, excluded: &ContextSpan, hunk_text: &str) -> LineIndex {
    build_line_index_with(&TermFrequencyEmbedder, "", source, excluded, hunk_text)
}

fn snap(similarity: f64) -> f64 {
    ((similarity * SIMILARITY_GRID).round() / SIMILARITY_GRID).clamp(0.0, 1.0)
}

/// Up to `r` index lines whose similarity to the hunk is at least
/// `threshold`, most similar first, ties by ascending line number. An
/// empty hunk retrieves nothing.
pub fn retrieve_with(
    embedder: &dyn Embedder,
    hunk_text: &str,
    index: &LineIndex,
    r: usize,
    threshold: f64,
    exec: Execution,
) -> Vec<RetrievedLine> {
    let hunk_norm = normalize_ws(hunk_text);
    if hunk_norm.is_empty() || r == 0 {
        return Vec::new();
    }
    let Ok(query) = embedder.embed(&hunk_norm) else { return Vec::new() };
    let exec = if index.entries.len() < PARALLEL_MIN_ENTRIES { Execution::Sequential } else { exec };
    let scores = par::map(exec, &index.entries, |e| snap(cosine(&query, &e.vector)));
    let mut hits: Vec<RetrievedLine> = index
        .entries
        .iter()
        .zip(scores)
        .filter(|(e, s)| *s >= threshold && e.text != hunk_norm)
        .map(|(e, s)| RetrievedLine { text: e.text.clone(), similarity: s, line_no: e.line_no })
        .collect();
    hits.sort_by(|a, b| b.similarity.total_cmp(&a.similarity).then(a.line_no.cmp(&b.line_no)));
    hits.truncate(r);
    hits
}

pub fn retrieve(hunk_text: &str, index: &LineIndex, r: usize, threshold: f64) -> Vec<RetrievedLine> {
    retrieve_with(&TermFrequencyEmbedder, hunk_text, index, r, threshold, Execution::default())
}

pub const CACHE_FORMAT: &str = "mendkit-line-index";
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct CacheHeader {
    format: String,
    version: u32,
    file_id: String,
    entries: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheRecord {
    file_id: String,
    line_no: usize,
    text: String,
    weights: Vec<(String, f64)>,
}

impl LineIndex {
    /// Writes the index as JSON lines: a versioned header, then one record
    /// per entry.
    pub fn write_cache<W: Write>(&self, mut out: W) -> Result<(), CacheError> {
        let header = CacheHeader {
            format: CACHE_FORMAT.into(),
            version: CACHE_VERSION,
            file_id: self.file_id.clone(),
            entries: self.entries.len(),
        };
        let to_io = |e: serde_json::Error| CacheError::Io(e.into());
        writeln!(out, "{}", serde_json::to_string(&header).map_err(to_io)?)?;
        for e in &self.entries {
            let rec = CacheRecord {
                file_id: self.file_id.clone(),
                line_no: e.line_no,
                text: e.text.clone(),
                weights: e.vector.weights.clone(),
            };
            writeln!(out, "{}", serde_json::to_string(&rec).map_err(to_io)?)?;
        }
        Ok(())
    }

    pub fn read_cache<R: BufRead>(input: R) -> Result<LineIndex, CacheError> {
        let mut lines = input.lines();
        let first = lines.next().ok_or_else(|| CacheError::Header("empty cache".into()))??;
        let header: CacheHeader =
            serde_json::from_str(&first).map_err(|source| CacheError::Json { line: 1, source })?;
        if header.format != CACHE_FORMAT || header.version != CACHE_VERSION {
            return Err(CacheError::Header(format!("{} v{}", header.format, header.version)));
        }
        let mut entries = Vec::with_capacity(header.entries);
        for (idx, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CacheRecord =
                serde_json::from_str(&line).map_err(|source| CacheError::Json { line: idx + 2, source })?;
            entries.push(IndexEntry { text: rec.text, line_no: rec.line_no, vector: LineVector { weights: rec.weights } });
        }
        if entries.len() != header.entries {
            return Err(CacheError::Header(format!("expected {} entries, found {}", header.entries, entries.len())));
        }
        Ok(LineIndex { file_id: header.file_id, entries })
    }
}
