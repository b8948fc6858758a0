//! Indentation-based function scanner for Python.

use super::{FunctionScanner, FunctionSpan, ScanError};
use crate::lang::Language;
use crate::lexer::{self, Class};

pub struct IndentScanner;

#[derive(Debug, Clone, Default)]
struct LineInfo {
    /// Line continues a previous logical line (open bracket, open string,
    /// or trailing backslash).
    continuation: bool,
    /// Line holds code or literal text (not just whitespace/comments).
    content: bool,
    indent: usize,
    /// Code text with comments removed and literals blanked.
    code: String,
}

fn indent_width(line: &str) -> usize {
    let mut width = 0;
    for ch in line.chars() {
        match ch {
            ' ' => width += 1,
            '\t' => width = (width / 8 + 1) * 8,
            '\x0c' => width = 0,
            _ => break,
        }
    }
    width
}

fn analyse(source: &str) -> Result<Vec<LineInfo>, ScanError> {
    let classes = lexer::classify(source, Language::Python);
    let masked = lexer::mask(source, Language::Python);
    let bytes = source.as_bytes();
    let mut infos = Vec::new();
    let mut depth: i64 = 0;
    let mut pending_backslash = false;
    let mut offset = 0;

    for (idx, (line, masked_line)) in source.split('\n').zip(masked.split('\n')).enumerate() {
        if offset >= bytes.len() && line.is_empty() && idx > 0 {
            break;
        }
        let starts_in_string = offset > 0 && classes[offset - 1] == Class::Str;
        let mut info = LineInfo {
            continuation: depth > 0 || pending_backslash || starts_in_string,
            ..LineInfo::default()
        };
        let mut last_code = None;
        for (k, b) in line.bytes().enumerate() {
            match classes[offset + k] {
                Class::Code => {
                    if !b.is_ascii_whitespace() {
                        info.content = true;
                        last_code = Some(b);
                    }
                    match b {
                        b'(' | b'[' | b'{' => depth += 1,
                        b')' | b']' | b'}' => {
                            depth -= 1;
                            if depth < 0 {
                                return Err(ScanError { line: idx + 1, reason: format!("unmatched `{}`", b as char) });
                            }
                        }
                        _ => {}
                    }
                }
                Class::Str => {
                    info.content = true;
                    last_code = None;
                }
                Class::Comment => {}
            }
        }
        pending_backslash = last_code == Some(b'\\');
        info.indent = indent_width(line);
        info.code = masked_line.trim().to_string();
        infos.push(info);
        offset += line.len() + 1;
    }
    if depth != 0 {
        return Err(ScanError { line: infos.len(), reason: "unclosed bracket at end of file".into() });
    }
    Ok(infos)
}

fn is_def(code: &str) -> bool {
    code.starts_with("def ") || code.starts_with("async def ")
}

impl FunctionScanner for IndentScanner {
    fn functions(&self, source: &str) -> Result<Vec<FunctionSpan>, ScanError> {
        let lines = analyse(source)?;
        let logical = |i: usize| !lines[i].continuation && lines[i].content;
        let mut spans = Vec::new();
        for i in 0..lines.len() {
            if !logical(i) || !is_def(&lines[i].code) {
                continue;
            }
            let indent = lines[i].indent;
            let mut last = i;
            for (j, info) in lines.iter().enumerate().skip(i + 1) {
                if logical(j) && info.indent <= indent {
                    break;
                }
                if info.content {
                    last = j;
                }
            }
            // Decorators directly above, at the same indentation.
            let mut first = i;
            let mut k = i;
            while k > 0 {
                // Find the previous logical start.
                let mut p = k - 1;
                while p > 0 && lines[p].continuation {
                    p -= 1;
                }
                if logical(p) && lines[p].indent == indent && lines[p].code.starts_with('@') && (p + 1..k).all(|q| lines[q].continuation) {
                    first = p;
                    k = p;
                } else {
                    break;
                }
            }
            spans.push(FunctionSpan { first: first + 1, last: last + 1 });
        }
        Ok(spans)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spans(src: &str) -> Vec<(usize, usize)> {
        IndentScanner.functions(src).unwrap().into_iter().map(|s| (s.first, s.last)).collect()
    }

    #[test]
    fn simple_and_nested_defs() {
        let src = "\
import os

def outer(a):
    def inner(b):
        return a + b

    return inner
x = 1
";
        assert_eq!(spans(src), vec![(3, 7), (4, 5)]);
    }

    #[test]
    fn decorators_and_methods() {
        let src = "\
class K:
    @staticmethod
    @other(
        1)
    def m():
        '''doc
less indented'''
        return 1
    # trailing comment

    y = 2
";
        assert_eq!(spans(src), vec![(2, 8)]);
    }

    #[test]
    fn multiline_signature_and_backslash() {
        let src = "def f(a,\nb):\n    x = a + \\\nb\n    return x\n";
        assert_eq!(spans(src), vec![(1, 5)]);
    }

    #[test]
    fn one_liner() {
        assert_eq!(spans("def f(): return 1\ng = 2\n"), vec![(1, 1)]);
    }

    #[test]
    fn unbalanced_is_error() {
        assert!(IndentScanner.functions("def f(:\n    pass\n").is_err());
    }
}
