//! Character-level lexical classes for source text.
//!
//! Only comments and string/char literals are recognised; everything else
//! is code. That is enough to strip comments safely and to hide braces and
//! quotes inside literals from the function scanners.

use crate::lang::Language;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Code,
    Comment,
    Str,
}

/// Classifies every byte of `text`. The result has `text.len()` entries;
/// multi-byte characters get the class of their first byte on all bytes.
pub fn classify(text: &str, lang: Language) -> Vec<Class> {
    let bytes = text.as_bytes();
    let mut out = vec![Class::Code; bytes.len()];
    let mut i = 0;
    let n = bytes.len();
    let starts = |i: usize, pat: &[u8]| bytes[i..].starts_with(pat);

    while i < n {
        let b = bytes[i];
        match lang {
            Language::Python => {
                if b == b'#' {
                    let end = memchr(b'\n', &bytes[i..]).map_or(n, |p| i + p);
                    fill(&mut out, i, end, Class::Comment);
                    i = end;
                    continue;
                }
                if b == b'"' || b == b'\'' {
                    let triple = i + 2 < n && bytes[i + 1] == b && bytes[i + 2] == b;
                    let end = if triple {
                        scan_until(bytes, i + 3, &[b, b, b], true)
                    } else {
                        scan_quoted(bytes, i + 1, b, true)
                    };
                    fill(&mut out, i, end, Class::Str);
                    i = end;
                    continue;
                }
            }
            Language::C | Language::Java | Language::JavaScript => {
                if starts(i, b"//") {
                    let end = memchr(b'\n', &bytes[i..]).map_or(n, |p| i + p);
                    fill(&mut out, i, end, Class::Comment);
                    i = end;
                    continue;
                }
                if starts(i, b"/*") {
                    let end = scan_until(bytes, i + 2, b"*/", false);
                    fill(&mut out, i, end, Class::Comment);
                    i = end;
                    continue;
                }
                if lang == Language::Java && starts(i, b"\"\"\"") {
                    let end = scan_until(bytes, i + 3, b"\"\"\"", true);
                    fill(&mut out, i, end, Class::Str);
                    i = end;
                    continue;
                }
                if b == b'"' || b == b'\'' {
                    let end = scan_quoted(bytes, i + 1, b, true);
                    fill(&mut out, i, end, Class::Str);
                    i = end;
                    continue;
                }
                if lang == Language::JavaScript && b == b'`' {
                    let end = scan_until(bytes, i + 1, b"`", true);
                    fill(&mut out, i, end, Class::Str);
                    i = end;
                    continue;
                }
            }
        }
        i += 1;
    }
    out
}

fn fill(out: &mut [Class], from: usize, to: usize, class: Class) {
    for c in &mut out[from..to] {
        *c = class;
    }
}

fn memchr(needle: u8, hay: &[u8]) -> Option<usize> {
    hay.iter().position(|&b| b == needle)
}

/// Index just past the closing `quote`, honouring backslash escapes.
/// Single-line literals stop at an unescaped newline.
fn scan_quoted(bytes: &[u8], mut i: usize, quote: u8, escapes: bool) -> usize {
    while i < bytes.len() {
        match bytes[i] {
            b'\\' if escapes => i += 2,
            b'\n' => return i,
            b if b == quote => return i + 1,
            _ => i += 1,
        }
    }
    bytes.len()
}

/// Index just past `close`, or end of input when unterminated.
fn scan_until(bytes: &[u8], mut i: usize, close: &[u8], escapes: bool) -> usize {
    while i < bytes.len() {
        if escapes && bytes[i] == b'\\' {
            i += 2;
            continue;
        }
        if bytes[i..].starts_with(close) {
            return i + close.len();
        }
        i += 1;
    }
    bytes.len()
}

/// Removes comments, keeping string literals intact. Line structure is
/// preserved: newlines inside block comments survive, and an inline
/// comment collapses to a single space.
pub fn strip_comments(text: &str, lang: Language) -> String {
    let classes = classify(text, lang);
    let mut out = String::with_capacity(text.len());
    let mut in_comment = false;
    for (idx, ch) in text.char_indices() {
        if classes[idx] == Class::Comment {
            if ch == '\n' {
                out.push('\n');
            } else if !in_comment {
                out.push(' ');
            }
            in_comment = true;
        } else {
            in_comment = false;
            out.push(ch);
        }
    }
    out
}

/// Strips comments from a hunk and tidies the result: trailing whitespace
/// is removed and lines left blank are dropped.
pub fn strip_hunk_comments(hunk: &str, lang: Language) -> String {
    strip_comments(hunk, lang)
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.trim().is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Replaces comment and literal bytes with spaces (newlines kept), so that
/// structural characters inside them are invisible to scanners.
pub fn mask(text: &str, lang: Language) -> String {
    let classes = classify(text, lang);
    text.char_indices()
        .map(|(idx, ch)| match classes[idx] {
            Class::Code => ch,
            _ if ch == '\n' => '\n',
            Class::Str if is_quote(ch) => ch,
            _ => ' ',
        })
        .collect()
}

fn is_quote(ch: char) -> bool {
    matches!(ch, '"' | '\'' | '`')
}
